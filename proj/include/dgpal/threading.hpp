#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

#include "dgpal/types.hpp"

namespace dgpal {

inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? static_cast<int>(hw) : 1;
}

/// Run fn(chunk_index, begin, end) over [0, total) split into fixed-size
/// chunks.  Chunk boundaries depend only on `total` and `chunk_size`, never
/// on the worker count, so per-chunk results can be reduced in chunk order
/// for a thread-count-independent (deterministic) total.
inline void parallel_chunks(
    Index total, Index chunk_size, int threads,
    const std::function<void(Index, Index, Index)>& fn) {
  if (total <= 0) return;
  if (chunk_size < 1) chunk_size = 1;
  const Index n_chunks = (total + chunk_size - 1) / chunk_size;
  const int n_workers =
      static_cast<int>(std::min<Index>(resolve_threads(threads), n_chunks));

  if (n_workers <= 1) {
    for (Index c = 0; c < n_chunks; ++c) {
      fn(c, c * chunk_size, std::min(total, (c + 1) * chunk_size));
    }
    return;
  }

  std::atomic<Index> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const Index c = next.fetch_add(1);
      if (c >= n_chunks) return;
      try {
        fn(c, c * chunk_size, std::min(total, (c + 1) * chunk_size));
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(n_workers);
  for (int i = 0; i < n_workers; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace dgpal
