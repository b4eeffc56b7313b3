#pragma once

#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace socialfabric {

// Worker cap: SF_THREADS when set, hardware concurrency otherwise.
inline int thread_budget() {
  if (const char* env = std::getenv("SF_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n < 64 ? n : 64;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw >= 1 ? static_cast<int>(hw) : 1;
}

// Runs fn(i) for i in [0, count). Each index is processed exactly once;
// determinism is the caller's job (write to slot i, no shared mutation).
template <typename Fn>
inline void parallel_for(int count, Fn&& fn) {
  const int workers = std::min(thread_budget(), count);
  if (workers <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace socialfabric
