#include "netkf/log.hpp"

#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>

namespace netkf {

LogLevel log_level() {
  static const LogLevel level = [] {
    const char* env = std::getenv("NETKF_LOG");
    if (env == nullptr) {
      return LogLevel::warn;
    }
    const std::string s(env);
    if (s == "error") return LogLevel::error;
    if (s == "info") return LogLevel::info;
    if (s == "debug") return LogLevel::debug;
    return LogLevel::warn;
  }();
  return level;
}

void log(LogLevel level, std::string_view msg) {
  if (static_cast<int>(level) > static_cast<int>(log_level())) {
    return;
  }
  static std::mutex mu;
  static constexpr const char* names[] = {"error", "warn", "info", "debug"};
  std::lock_guard lock(mu);
  std::cerr << "[netkf " << names[static_cast<int>(level)] << "] " << msg << '\n';
}

}  // namespace netkf
