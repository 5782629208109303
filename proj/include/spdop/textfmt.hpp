#pragma once

#include <charconv>
#include <cstdio>
#include <string>

namespace spdop {

/// Shortest decimal that round-trips exactly to the same double.
inline std::string shortest_decimal(double x) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, end);
}

/// Fixed 10-significant-digit formatting used by all result tables, so
/// output files diff reproducibly.
inline std::string format_sig10(double x) {
  char buf[40];
  const int len = std::snprintf(buf, sizeof(buf), "%.10g", x);
  return std::string(buf, buf + len);
}

}  // namespace spdop
