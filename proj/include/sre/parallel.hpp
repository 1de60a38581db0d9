#pragma once

#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace sre {

namespace detail {
inline std::atomic<int>& worker_override() {
  static std::atomic<int> count{0};  // 0 = use hardware default
  return count;
}
}  // namespace detail

/// Worker count used by parallel_for. 0 restores the default
/// (SRE_WORKERS env var if set, else hardware concurrency).
inline void set_worker_count(int n) { detail::worker_override().store(n); }

inline int worker_count() {
  const int forced = detail::worker_override().load();
  if (forced > 0) return forced;
  if (const char* env = std::getenv("SRE_WORKERS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

/// Static-partition fork/join loop: body(i) for i in [0, count). Bodies must
/// write only to slots indexed by i; results are then identical for every
/// worker count. The first exception thrown by any body is rethrown.
inline void parallel_for(std::int64_t count, const std::function<void(std::int64_t)>& body) {
  if (count <= 0) return;
  const int workers = static_cast<int>(std::min<std::int64_t>(worker_count(), count));
  if (workers <= 1) {
    for (std::int64_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::exception_ptr first_error;
  std::atomic<bool> failed{false};
  for (int w = 0; w < workers; ++w) {
    const std::int64_t lo = count * w / workers;
    const std::int64_t hi = count * (w + 1) / workers;
    pool.emplace_back([&, lo, hi] {
      try {
        for (std::int64_t i = lo; i < hi && !failed.load(std::memory_order_relaxed); ++i)
          body(i);
      } catch (...) {
        if (!failed.exchange(true)) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace sre
