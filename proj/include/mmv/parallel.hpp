#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace mmv {

// Runs body(i) for i in [0, n). jobs <= 0 means one worker per hardware
// thread; jobs == 1 runs serially on the calling thread. Work indices are
// pulled from an atomic counter, so callers must write results into
// per-index slots — then assembly never depends on scheduling order.
// The first exception thrown by any worker is rethrown after the join.
inline void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& body) {
  if (n == 0) return;
  std::size_t workers = jobs <= 0 ? std::max(1u, std::thread::hardware_concurrency())
                                  : static_cast<std::size_t>(jobs);
  workers = std::min(workers, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex err_mu;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace mmv
