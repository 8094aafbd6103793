#pragma once

#include <iostream>
#include <string_view>

namespace bqa::logging {

enum class Level { Debug = 0, Info = 1, Warn = 2, Error = 3, Off = 4 };

inline Level& threshold() {
  static Level level = Level::Info;
  return level;
}

inline void write(Level level, std::string_view msg) {
  if (level < threshold()) return;
  static constexpr const char* kNames[] = {"debug", "info", "warn", "error"};
  std::cerr << '[' << kNames[static_cast<int>(level)] << "] " << msg << '\n';
}

inline void info(std::string_view msg) { write(Level::Info, msg); }
inline void warn(std::string_view msg) { write(Level::Warn, msg); }
inline void error(std::string_view msg) { write(Level::Error, msg); }

}  // namespace bqa::logging
