#ifndef CWS_PARALLEL_HPP
#define CWS_PARALLEL_HPP

#include <algorithm>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace cws {

/// Runs fn(i) for i in [0, count) across hardware threads. Work items must
/// write to disjoint, pre-sized slots so the result is independent of the
/// interleaving.
inline void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn) {
  const std::size_t hw = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  const std::size_t n_threads = std::min(hw, count);
  if (n_threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(n_threads);
  for (std::size_t t = 0; t < n_threads; ++t) {
    pool.emplace_back([t, n_threads, count, &fn] {
      for (std::size_t i = t; i < count; i += n_threads) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

} // namespace cws

#endif
