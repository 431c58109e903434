#pragma once

#include <chrono>
#include <ctime>
#include <string>

namespace sketchplay {

/// Current time as ISO-8601 UTC with second resolution.
inline std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace sketchplay
