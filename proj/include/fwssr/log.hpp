// log.hpp — minimal stderr logger, level from the FWSSR_LOG env var
// (error | info | debug; default info).

#ifndef FWSSR_LOG_HPP
#define FWSSR_LOG_HPP

#include <cstdio>

namespace fwssr {

enum class LogLevel { error = 0, info = 1, debug = 2 };

LogLevel log_level();

}  // namespace fwssr

#define FWSSR_LOG_AT(level, tag, ...)                            \
  do {                                                           \
    if (static_cast<int>(::fwssr::log_level()) >=                \
        static_cast<int>(level)) {                               \
      std::fprintf(stderr, "[fwssr:" tag "] ");                  \
      std::fprintf(stderr, __VA_ARGS__);                         \
      std::fprintf(stderr, "\n");                                \
    }                                                            \
  } while (0)

#define FWSSR_LOG_ERROR(...) \
  FWSSR_LOG_AT(::fwssr::LogLevel::error, "error", __VA_ARGS__)
#define FWSSR_LOG_INFO(...) \
  FWSSR_LOG_AT(::fwssr::LogLevel::info, "info", __VA_ARGS__)
#define FWSSR_LOG_DEBUG(...) \
  FWSSR_LOG_AT(::fwssr::LogLevel::debug, "debug", __VA_ARGS__)

#endif  // FWSSR_LOG_HPP
