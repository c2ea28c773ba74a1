#pragma once

#include <string>

namespace graspmap {

enum class LogLevel { kError = 0, kInfo = 1, kDebug = 2 };

/// Process-wide log level, initialized from GRASPMAP_LOG_LEVEL
/// (error | info | debug, default info).
LogLevel log_level();
void set_log_level(LogLevel level);

void log_error(const std::string& msg);
void log_info(const std::string& msg);
void log_debug(const std::string& msg);

} // namespace graspmap
