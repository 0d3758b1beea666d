#pragma once

#include <atomic>
#include <functional>
#include <thread>
#include <vector>

namespace ynet {

// Runs fn(i) for i in [0, n). With threads <= 1 this is a plain loop; with
// more threads, items are claimed from an atomic counter. Callers that need
// determinism must make fn(i) write only to item-i state; reductions are
// merged by the caller in index order.
inline void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  if (n <= 0) return;
  if (threads <= 1 || n == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  const int workers = std::min(threads, n);
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int t = 0; t < workers; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= n) return;
        fn(i);
      }
    });
  }
  for (auto& th : pool) th.join();
}

inline int effective_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : int(hw);
}

}  // namespace ynet
