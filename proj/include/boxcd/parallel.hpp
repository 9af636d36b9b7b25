#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace boxcd {

/// Calls fn(i) for i in [0, count) on up to `workers` threads. Work items
/// must write only to their own slot; the first exception is rethrown.
template <typename Fn>
void parallel_for(std::int64_t count, unsigned workers, Fn&& fn) {
  if (count <= 0) return;
  const auto threads = static_cast<std::int64_t>(std::max(1u, workers));
  if (threads == 1 || count == 1) {
    for (std::int64_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::int64_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    for (std::int64_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = count;
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::int64_t t = 0; t < std::min(threads, count); ++t) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace boxcd
