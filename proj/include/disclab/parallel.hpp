#pragma once

#include <atomic>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace disclab {

// Worker count resolution: explicit argument > DISCLAB_WORKERS env > 1.
inline int resolve_workers(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("DISCLAB_WORKERS")) {
    const int w = std::atoi(env);
    if (w > 0) return w;
  }
  return 1;
}

// Runs fn(i) for i in [0, n_tasks) on up to `workers` threads. Tasks own their
// outputs (indexed by i), so results do not depend on the schedule; callers
// reduce in index order. The first exception thrown by a task is rethrown on
// the calling thread after the pool drains.
inline void parallel_for_indexed(long n_tasks, int workers, const std::function<void(long)>& fn) {
  workers = resolve_workers(workers);
  if (workers <= 1 || n_tasks <= 1) {
    for (long i = 0; i < n_tasks; ++i) fn(i);
    return;
  }
  std::atomic<long> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto run = [&] {
    for (;;) {
      const long i = next.fetch_add(1);
      if (i >= n_tasks || failed.load()) return;
      try {
        fn(i);
      } catch (...) {
        std::scoped_lock lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        failed.store(true);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const int n_threads = static_cast<int>(std::min<long>(workers, n_tasks));
  pool.reserve(n_threads);
  for (int t = 0; t < n_threads; ++t) pool.emplace_back(run);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace disclab
