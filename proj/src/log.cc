#include "wikityper/log.h"

#include <atomic>
#include <iostream>
#include <mutex>

namespace wikityper {
namespace {
std::atomic<LogLevel> g_level{LogLevel::kWarning};
std::mutex g_mutex;

std::string_view prefix(LogLevel level) {
  switch (level) {
    case LogLevel::kDebug: return "debug: ";
    case LogLevel::kInfo: return "";
    case LogLevel::kWarning: return "warning: ";
    case LogLevel::kError: return "error: ";
    case LogLevel::kQuiet: break;
  }
  return "";
}
}  // namespace

void set_log_level(LogLevel level) { g_level = level; }
LogLevel log_level() { return g_level; }

void log(LogLevel level, std::string_view message) {
  if (level < g_level.load() || level == LogLevel::kQuiet) return;
  std::lock_guard lock(g_mutex);
  std::cerr << prefix(level) << message << '\n';
}

}  // namespace wikityper
