#include "igrec/log.hpp"

#include <atomic>
#include <cstdlib>
#include <mutex>

namespace igrec::log {

namespace {

Level parse_env() {
  const char* v = std::getenv("IGREC_LOG");
  if (v == nullptr) return Level::Warn;
  const std::string s(v);
  if (s == "error") return Level::Error;
  if (s == "info") return Level::Info;
  if (s == "debug") return Level::Debug;
  return Level::Warn;
}

std::atomic<int>& current() {
  static std::atomic<int> level{static_cast<int>(parse_env())};
  return level;
}

const char* tag(Level l) {
  switch (l) {
    case Level::Error: return "error";
    case Level::Warn: return "warn";
    case Level::Info: return "info";
    case Level::Debug: return "debug";
  }
  return "?";
}

}  // namespace

Level threshold() { return static_cast<Level>(current().load()); }
void set_threshold(Level level) { current().store(static_cast<int>(level)); }

void write(Level level, const std::string& message) {
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  std::cerr << "[" << tag(level) << "] " << message << "\n";
}

}  // namespace igrec::log
