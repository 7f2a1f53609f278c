#pragma once

// Minimal stderr logging; level from RELOC_OPT_LOG (quiet, info, debug).

#include <cstdlib>
#include <iostream>
#include <string>
#include <type_traits>

namespace reloc {

enum class LogLevel { quiet = 0, info = 1, debug = 2 };

inline LogLevel& log_level_storage() {
    static LogLevel level = [] {
        const char* env = std::getenv("RELOC_OPT_LOG");
        const std::string v = env ? env : "";
        if (v == "info") return LogLevel::info;
        if (v == "debug") return LogLevel::debug;
        return LogLevel::quiet;
    }();
    return level;
}

inline LogLevel log_level() { return log_level_storage(); }
inline void set_log_level(LogLevel level) { log_level_storage() = level; }

template <typename Message>
void log_at(LogLevel level, const char* tag, Message&& message) {
    if (static_cast<int>(log_level()) < static_cast<int>(level)) return;
    if constexpr (std::is_invocable_v<Message>)
        std::cerr << "[" << tag << "] " << message() << '\n';
    else
        std::cerr << "[" << tag << "] " << message << '\n';
}

template <typename Message>
void log_info(Message&& message) {
    log_at(LogLevel::info, "info", std::forward<Message>(message));
}

template <typename Message>
void log_debug(Message&& message) {
    log_at(LogLevel::debug, "debug", std::forward<Message>(message));
}

}  // namespace reloc
