#include "pnpunmix/log.hpp"

#include <atomic>
#include <iostream>

namespace pnpunmix::log {

namespace {
std::atomic<Level> gLevel{Level::Warn};

void emit(Level at, const char* tag, std::string_view message) {
  if (at < gLevel.load(std::memory_order_relaxed)) return;
  std::cerr << "[pnpunmix " << tag << "] " << message << '\n';
}
}  // namespace

void setLevel(Level level) { gLevel.store(level, std::memory_order_relaxed); }
Level level() { return gLevel.load(std::memory_order_relaxed); }

void debug(std::string_view message) { emit(Level::Debug, "debug", message); }
void info(std::string_view message) { emit(Level::Info, "info", message); }
void warn(std::string_view message) { emit(Level::Warn, "warn", message); }

}  // namespace pnpunmix::log
