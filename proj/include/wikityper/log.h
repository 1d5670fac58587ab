#pragma once

#include <string_view>

namespace wikityper {

enum class LogLevel { kDebug, kInfo, kWarning, kError, kQuiet };

// Progress and diagnostics go to stderr; data never does.
void set_log_level(LogLevel level);
LogLevel log_level();
void log(LogLevel level, std::string_view message);

inline void log_info(std::string_view m) { log(LogLevel::kInfo, m); }
inline void log_warning(std::string_view m) { log(LogLevel::kWarning, m); }

}  // namespace wikityper
