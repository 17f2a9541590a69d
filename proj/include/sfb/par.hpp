#pragma once

#include <cstdlib>
#include <omp.h>

namespace sfb::par {

// Worker count: explicit value wins, then the SFB_THREADS environment
// variable, then the machine default. Results are thread-count invariant;
// this only affects wall time.
inline void configure(int threads) {
  if (threads <= 0) {
    if (const char* env = std::getenv("SFB_THREADS")) threads = std::atoi(env);
  }
  if (threads > 0) omp_set_num_threads(threads);
}

inline int max_threads() { return omp_get_max_threads(); }

}  // namespace sfb::par
