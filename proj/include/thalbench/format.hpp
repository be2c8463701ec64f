#pragma once

#include <charconv>
#include <cmath>
#include <string>

namespace thalbench {

/// Shortest decimal text that reads back to the same double. Non-finite
/// values print as "nan", "inf" and "-inf".
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

/// Fixed-point text with `digits` decimals, for annotations.
inline std::string format_fixed(double v, int digits) {
  if (!std::isfinite(v)) return format_number(v);
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, digits);
  return std::string(buf, r.ptr);
}

}  // namespace thalbench
