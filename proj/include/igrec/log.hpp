#pragma once

#include <iostream>
#include <sstream>
#include <string>

namespace igrec::log {

enum class Level { Error = 0, Warn = 1, Info = 2, Debug = 3 };

// Read once from IGREC_LOG (error|warn|info|debug); defaults to warn.
Level threshold();
void set_threshold(Level level);

void write(Level level, const std::string& message);

template <class... Args>
void emit(Level level, const Args&... args) {
  if (static_cast<int>(level) > static_cast<int>(threshold())) return;
  std::ostringstream os;
  (os << ... << args);
  write(level, os.str());
}

template <class... Args> void error(const Args&... a) { emit(Level::Error, a...); }
template <class... Args> void warn(const Args&... a) { emit(Level::Warn, a...); }
template <class... Args> void info(const Args&... a) { emit(Level::Info, a...); }
template <class... Args> void debug(const Args&... a) { emit(Level::Debug, a...); }

}  // namespace igrec::log
