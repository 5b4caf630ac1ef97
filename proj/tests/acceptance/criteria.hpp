#pragma once

// Shared reporting for the acceptance binaries: one PASS/FAIL line per
// criterion, detail lines indented beneath it.

#include <chrono>
#include <cstdio>
#include <string>

namespace fg::acceptance {

class Stopwatch {
 public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count(); }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

class Report {
 public:
  void detail(const std::string& line) const { std::printf("    %s\n", line.c_str()); }

  void criterion(int id, const std::string& summary, bool pass) {
    std::printf("criterion %2d %s  %s\n", id, pass ? "PASS" : "FAIL", summary.c_str());
    std::fflush(stdout);
    failed_ = failed_ || !pass;
  }

  int exit_code() const { return failed_ ? 1 : 0; }

 private:
  bool failed_ = false;
};

inline std::string fmt(const char* format, double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, value);
  return buf;
}

}  // namespace fg::acceptance
