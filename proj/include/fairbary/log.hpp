#pragma once

#include <atomic>
#include <cstdio>
#include <string_view>

#include <fmt/core.h>

namespace fairbary::log {

inline std::atomic<bool>& quiet_flag() {
  static std::atomic<bool> quiet{false};
  return quiet;
}

inline void set_quiet(bool quiet) { quiet_flag().store(quiet); }

template <typename... Args>
void warn(fmt::format_string<Args...> format, Args&&... args) {
  if (quiet_flag().load()) return;
  fmt::print(stderr, "warning: {}\n", fmt::format(format, std::forward<Args>(args)...));
}

template <typename... Args>
void info(fmt::format_string<Args...> format, Args&&... args) {
  if (quiet_flag().load()) return;
  fmt::print(stderr, "{}\n", fmt::format(format, std::forward<Args>(args)...));
}

}  // namespace fairbary::log
