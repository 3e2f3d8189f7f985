#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace gibbs {

// Runs fn(i) for i in [0, count). Each index owns its output slot, so results
// are identical for any worker count; only wall time changes.
inline void parallel_for(std::size_t count, int workers,
                         const std::function<void(std::size_t)>& fn) {
  if (count == 0) return;
  if (workers <= 1 || count == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t nthreads =
      std::min<std::size_t>(std::min<std::size_t>(static_cast<std::size_t>(workers), hw), count);

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error = nullptr;
  std::mutex err_mutex;

  auto body = [&]() {
    const std::size_t chunk = std::max<std::size_t>(1, count / (nthreads * 8));
    for (;;) {
      std::size_t begin = next.fetch_add(chunk);
      if (begin >= count || failed.load(std::memory_order_relaxed)) return;
      std::size_t end = std::min(count, begin + chunk);
      for (std::size_t i = begin; i < end; ++i) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lk(err_mutex);
          if (!first_error) first_error = std::current_exception();
          failed.store(true, std::memory_order_relaxed);
          return;
        }
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(nthreads);
  for (std::size_t k = 0; k < nthreads; ++k) pool.emplace_back(body);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace gibbs
