#include <iostream>

#include "fluidground/cli/commands.hpp"

int main(int argc, char** argv) { return fg::cli::run_cli(argc, argv, std::cout, std::cerr); }
