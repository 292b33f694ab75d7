#include "sonarflow/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>
#include <string>

#include "sonarflow/error.hpp"

namespace sonarflow {

namespace {
std::atomic<LogLevel> g_level{LogLevel::warn};
std::mutex g_mutex;

const char* tag(LogLevel level) {
    switch (level) {
        case LogLevel::debug: return "debug";
        case LogLevel::info: return "info";
        case LogLevel::warn: return "warn";
        case LogLevel::error: return "error";
        case LogLevel::off: return "off";
    }
    return "?";
}
}  // namespace

void set_log_level(LogLevel level) { g_level = level; }
LogLevel log_level() { return g_level; }

LogLevel parse_log_level(std::string_view name) {
    if (name == "debug") return LogLevel::debug;
    if (name == "info") return LogLevel::info;
    if (name == "warn") return LogLevel::warn;
    if (name == "error") return LogLevel::error;
    if (name == "off") return LogLevel::off;
    throw InputError("unknown log level '" + std::string(name) + "'");
}

void log(LogLevel level, std::string_view message) {
    if (level < g_level.load() || level == LogLevel::off) return;
    std::lock_guard lock(g_mutex);
    std::cerr << "[sonarflow " << tag(level) << "] " << message << '\n';
}

}  // namespace sonarflow
