#pragma once

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

#include "boga/volume.hpp"

namespace boga {

/// Worker count used by parallel_for. Results never depend on it: every
/// parallel loop in the library writes disjoint outputs and performs no
/// cross-chunk reductions.
void set_thread_count(int n);
int thread_count();

template <typename Fn>
void parallel_for(Index n, Fn &&fn)
{
  int const workers = static_cast<int>(std::min<Index>(thread_count(), std::max<Index>(n, 1)));
  if (workers <= 1) {
    fn(Index{0}, n);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  Index const chunk = (n + workers - 1) / workers;
  for (int w = 0; w < workers; w++) {
    Index const lo = w * chunk;
    Index const hi = std::min(n, lo + chunk);
    if (lo >= hi) {
      break;
    }
    pool.emplace_back([&, w, lo, hi] {
      try {
        fn(lo, hi);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto &t : pool) {
    t.join();
  }
  for (auto &e : errors) {
    if (e) {
      std::rethrow_exception(e);
    }
  }
}

} // namespace boga
