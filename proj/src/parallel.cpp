#include "thalbench/parallel.hpp"

#include <cstdlib>
#include <string>

namespace thalbench {

std::size_t default_workers() {
  if (const char* env = std::getenv("THALBENCH_WORKERS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1) return static_cast<std::size_t>(v);
    } catch (...) {
    }
  }
  const auto hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

}  // namespace thalbench
