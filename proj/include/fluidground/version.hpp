#pragma once

#include <string>

namespace fg {

/// "fluidground <version> (<git describe>)", echoed into every output.
inline std::string version_string() {
  return std::string("fluidground ") + FLUIDGROUND_VERSION + " (" + FLUIDGROUND_GIT_DESCRIBE + ")";
}

}  // namespace fg
