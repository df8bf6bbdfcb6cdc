#include "stairkit/log.hpp"

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <string>

namespace stairkit::log {
namespace {

Level parse_env() {
  const char* env = std::getenv("STAIRKIT_LOG");
  if (env == nullptr) return Level::Warn;
  const std::string v(env);
  if (v == "error" || v == "0") return Level::Error;
  if (v == "info" || v == "2") return Level::Info;
  if (v == "debug" || v == "3") return Level::Debug;
  return Level::Warn;
}

std::atomic<int>& current() {
  static std::atomic<int> lvl{static_cast<int>(parse_env())};
  return lvl;
}

constexpr const char* kNames[] = {"error", "warn", "info", "debug"};

}  // namespace

Level level() { return static_cast<Level>(current().load()); }
void set_level(Level lvl) { current().store(static_cast<int>(lvl)); }

void write(Level lvl, std::string_view msg) {
  if (static_cast<int>(lvl) > current().load()) return;
  std::cerr << "[stairkit " << kNames[static_cast<int>(lvl)] << "] " << msg << '\n';
}

}  // namespace stairkit::log
