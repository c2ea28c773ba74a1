#include "graspmap/logging.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <mutex>

namespace graspmap {

namespace {

LogLevel g_level = LogLevel::kInfo;
std::once_flag g_init_flag;
std::mutex g_write_mutex;

void init_from_env() {
    const char* env = std::getenv("GRASPMAP_LOG_LEVEL");
    if (env == nullptr) return;
    if (std::strcmp(env, "error") == 0) {
        g_level = LogLevel::kError;
    } else if (std::strcmp(env, "info") == 0) {
        g_level = LogLevel::kInfo;
    } else if (std::strcmp(env, "debug") == 0) {
        g_level = LogLevel::kDebug;
    }
}

void write(const char* tag, const std::string& msg) {
    std::lock_guard<std::mutex> lock(g_write_mutex);
    std::fprintf(stderr, "[%s] %s\n", tag, msg.c_str());
}

} // namespace

LogLevel log_level() {
    std::call_once(g_init_flag, init_from_env);
    return g_level;
}

void set_log_level(LogLevel level) {
    std::call_once(g_init_flag, init_from_env);
    g_level = level;
}

void log_error(const std::string& msg) {
    if (log_level() >= LogLevel::kError) write("error", msg);
}

void log_info(const std::string& msg) {
    if (log_level() >= LogLevel::kInfo) write("info", msg);
}

void log_debug(const std::string& msg) {
    if (log_level() >= LogLevel::kDebug) write("debug", msg);
}

} // namespace graspmap
