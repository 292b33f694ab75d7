#pragma once

#include <string_view>

namespace sonarflow {

enum class LogLevel { debug = 0, info = 1, warn = 2, error = 3, off = 4 };

void set_log_level(LogLevel level);
LogLevel log_level();
/// Accepts debug|info|warn|error|off; throws InputError otherwise.
LogLevel parse_log_level(std::string_view name);

/// Thread-safe line output to stderr when `level` is enabled.
void log(LogLevel level, std::string_view message);
inline void log_warn(std::string_view m) { log(LogLevel::warn, m); }
inline void log_info(std::string_view m) { log(LogLevel::info, m); }
inline void log_debug(std::string_view m) { log(LogLevel::debug, m); }

}  // namespace sonarflow
