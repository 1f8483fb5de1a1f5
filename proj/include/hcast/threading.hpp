#pragma once

#include "hcast/types.hpp"

#include <exception>
#include <thread>
#include <vector>

namespace hcast {

/// Runs f(i) for i in [0, n) on up to `threads` workers in contiguous
/// chunks. Serial when threads <= 1. The first exception wins and is
/// rethrown after all workers join.
template <typename F>
void parallel_for(Index n, int threads, F&& f) {
  if (n <= 0) return;
  if (threads <= 1 || n == 1) {
    for (Index i = 0; i < n; ++i) f(i);
    return;
  }
  const int workers = static_cast<int>(std::min<Index>(threads, n));
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  const Index chunk = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      const Index lo = w * chunk;
      const Index hi = std::min(n, lo + chunk);
      try {
        for (Index i = lo; i < hi; ++i) f(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace hcast
