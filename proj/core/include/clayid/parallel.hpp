#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace clayid {

inline int resolve_jobs(int jobs) {
  if (jobs > 0) return jobs;
  const unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? static_cast<int>(hc) : 1;
}

/// Runs fn(chunk_index, begin, end) over [0, total) split into fixed-size
/// chunks. Chunks are claimed by a pool of `jobs` workers; callers that
/// need a deterministic result must write into per-chunk slots and merge
/// in chunk order afterwards. The first exception thrown by any worker
/// is rethrown on the calling thread.
inline void parallel_chunks(std::size_t total, std::size_t chunk_size, int jobs,
                            const std::function<void(std::size_t, std::size_t,
                                                     std::size_t)>& fn) {
  if (total == 0) return;
  if (chunk_size == 0) chunk_size = total;
  const std::size_t n_chunks = (total + chunk_size - 1) / chunk_size;
  const int workers =
      static_cast<int>(std::min<std::size_t>(resolve_jobs(jobs), n_chunks));

  if (workers <= 1) {
    for (std::size_t c = 0; c < n_chunks; ++c) {
      const std::size_t begin = c * chunk_size;
      fn(c, begin, std::min(begin + chunk_size, total));
    }
    return;
  }

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;

  auto worker = [&] {
    while (!failed.load(std::memory_order_relaxed)) {
      const std::size_t c = next.fetch_add(1);
      if (c >= n_chunks) break;
      const std::size_t begin = c * chunk_size;
      try {
        fn(c, begin, std::min(begin + chunk_size, total));
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!failed.exchange(true)) error = std::current_exception();
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

/// Runs fn(i) for i in [0, total) with one chunk per index.
inline void parallel_for(std::size_t total, int jobs,
                         const std::function<void(std::size_t)>& fn) {
  parallel_chunks(total, 1, jobs,
                  [&fn](std::size_t, std::size_t begin, std::size_t) { fn(begin); });
}

}  // namespace clayid
