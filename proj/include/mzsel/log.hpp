#pragma once

#include <cstdlib>
#include <iostream>
#include <string>
#include <string_view>

namespace mzsel::log {

enum class Level { Debug = 0, Info = 1, Warn = 2, Error = 3, Off = 4 };

// Read once from MZSEL_LOG. Only affects stderr chatter, never outputs.
inline Level threshold() {
  static const Level level = [] {
    const char* env = std::getenv("MZSEL_LOG");
    if (env == nullptr) return Level::Warn;
    const std::string_view v(env);
    if (v == "debug") return Level::Debug;
    if (v == "info") return Level::Info;
    if (v == "error") return Level::Error;
    if (v == "off") return Level::Off;
    return Level::Warn;
  }();
  return level;
}

inline void write(Level level, std::string_view tag, std::string_view message) {
  if (level < threshold()) return;
  std::cerr << "[mzsel " << tag << "] " << message << '\n';
}

inline void debug(std::string_view m) { write(Level::Debug, "debug", m); }
inline void info(std::string_view m) { write(Level::Info, "info", m); }
inline void warn(std::string_view m) { write(Level::Warn, "warn", m); }
inline void error(std::string_view m) { write(Level::Error, "error", m); }

}  // namespace mzsel::log
