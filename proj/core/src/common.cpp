#include "modcodec/common.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>

namespace modcodec {

int max_threads() {
  static const int cached = [] {
    int n = static_cast<int>(std::thread::hardware_concurrency());
    if (n < 1) n = 1;
    if (const char* env = std::getenv("MODCODEC_THREADS")) {
      char* end = nullptr;
      long cap = std::strtol(env, &end, 10);
      if (end != env && cap >= 1) n = std::min<long>(n, cap);
    }
    return n;
  }();
  return cached;
}

}  // namespace modcodec
