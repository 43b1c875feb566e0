#include "fwssr/log.hpp"

#include <cstdlib>
#include <cstring>

namespace fwssr {

LogLevel log_level() {
  static const LogLevel level = [] {
    const char* env = std::getenv("FWSSR_LOG");
    if (env == nullptr) return LogLevel::info;
    if (std::strcmp(env, "error") == 0) return LogLevel::error;
    if (std::strcmp(env, "debug") == 0) return LogLevel::debug;
    return LogLevel::info;
  }();
  return level;
}

}  // namespace fwssr
