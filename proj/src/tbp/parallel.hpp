#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace tbp {

inline int resolve_workers(int requested) {
  if (requested > 0) return requested;
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Runs fn(chunk_index, begin, end, worker_id) over [0, n) split into fixed-size
// chunks.  Chunk boundaries depend only on (n, chunk_size), never on the worker
// count, so any output written into chunk-indexed slots (and any final reduction
// done in chunk order by the caller) is bit-identical for every worker count.
inline void parallel_chunks(int64_t n, int64_t chunk_size, int workers,
                            const std::function<void(int64_t, int64_t, int64_t, int)>& fn) {
  if (n <= 0) return;
  const int64_t n_chunks = (n + chunk_size - 1) / chunk_size;
  workers = resolve_workers(workers);
  if (workers > n_chunks) workers = static_cast<int>(n_chunks);

  if (workers <= 1) {
    for (int64_t c = 0; c < n_chunks; ++c) {
      int64_t b = c * chunk_size;
      int64_t e = std::min(n, b + chunk_size);
      fn(c, b, e, 0);
    }
    return;
  }

  std::atomic<int64_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto body = [&](int worker_id) {
    for (;;) {
      int64_t c = next.fetch_add(1);
      if (c >= n_chunks) return;
      int64_t b = c * chunk_size;
      int64_t e = std::min(n, b + chunk_size);
      try {
        fn(c, b, e, worker_id);
      } catch (...) {
        std::lock_guard<std::mutex> g(error_mu);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (int w = 1; w < workers; ++w) pool.emplace_back(body, w);
  body(0);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace tbp
