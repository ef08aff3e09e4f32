#pragma once

#include <cstdlib>
#include <string>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

namespace motionrocket {

/// Logs to stderr; level from MOTIONROCKET_LOG (trace, debug, info, warn, error, off), default info.
inline void init_logging() {
  auto logger = spdlog::stderr_color_mt("motionrocket");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");
  const char* env = std::getenv("MOTIONROCKET_LOG");
  spdlog::set_level(env ? spdlog::level::from_str(env) : spdlog::level::info);
}

}  // namespace motionrocket
