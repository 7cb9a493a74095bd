#pragma once

#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>

namespace gcsvr::log {

enum class Level { quiet = 0, warn = 1, info = 2, debug = 3 };

// Verbosity comes from the STGCSVR_LOG env var: quiet|warn|info|debug (default warn).
inline Level threshold() {
    static const Level level = [] {
        const char* env = std::getenv("STGCSVR_LOG");
        if (env == nullptr) return Level::warn;
        const std::string v(env);
        if (v == "quiet" || v == "0") return Level::quiet;
        if (v == "info" || v == "2") return Level::info;
        if (v == "debug" || v == "3") return Level::debug;
        return Level::warn;
    }();
    return level;
}

inline void emit(Level lvl, const std::string& msg) {
    if (static_cast<int>(lvl) <= static_cast<int>(threshold())) {
        const char* tag = lvl == Level::warn ? "warn" : (lvl == Level::info ? "info" : "debug");
        std::cerr << "[gcsvr:" << tag << "] " << msg << '\n';
    }
}

inline void warn(const std::string& msg) { emit(Level::warn, msg); }
inline void info(const std::string& msg) { emit(Level::info, msg); }
inline void debug(const std::string& msg) { emit(Level::debug, msg); }

}  // namespace gcsvr::log
