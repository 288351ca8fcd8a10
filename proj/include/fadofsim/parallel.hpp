#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace fadofsim {

/// Worker count used by the grid evaluators; 1 means run inline.
std::size_t thread_count();
void set_thread_count(std::size_t n);

/// Calls fn(begin, end) over contiguous chunks of [0, n). Results must not
/// depend on the chunking.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const std::size_t workers = std::min(thread_count(), std::max<std::size_t>(n / 1024, 1));
  if (workers <= 1) {
    fn(std::size_t{0}, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t b = w * chunk;
    const std::size_t e = std::min(n, b + chunk);
    if (b >= e) break;
    pool.emplace_back([&fn, b, e] { fn(b, e); });
  }
  for (auto& t : pool) t.join();
}

}  // namespace fadofsim
