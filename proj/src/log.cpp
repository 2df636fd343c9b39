#include "rbin/log.hpp"

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>

namespace rbin::log {

namespace {

Level parse(const char* s) {
  if (!s) return Level::kWarn;
  const std::string v(s);
  if (v == "debug") return Level::kDebug;
  if (v == "info") return Level::kInfo;
  if (v == "error") return Level::kError;
  if (v == "off") return Level::kOff;
  return Level::kWarn;
}

std::atomic<int>& current() {
  static std::atomic<int> level{static_cast<int>(parse(std::getenv("RB_LOG")))};
  return level;
}

constexpr std::string_view kNames[] = {"debug", "info", "warn", "error"};

}  // namespace

Level threshold() { return static_cast<Level>(current().load()); }
void set_threshold(Level level) { current().store(static_cast<int>(level)); }

void write(Level level, std::string_view message) {
  if (level < threshold() || level == Level::kOff) return;
  static std::mutex mu;
  std::lock_guard lock(mu);
  std::cerr << "[rbin " << kNames[static_cast<int>(level)] << "] " << message << '\n';
}

}  // namespace rbin::log
