#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace safexfer {

// Number of worker threads for grid sweeps; 0 means hardware concurrency.
void set_worker_threads(unsigned n);
unsigned worker_threads();

// Splits [0, n) into fixed chunks and runs fn(chunk, first, last) on a pool of
// worker threads. Chunk boundaries depend only on n and chunk_size, so callers
// that store per-chunk results and reduce them in chunk order get results that
// do not depend on scheduling or thread count.
template <class Fn>
void for_each_chunk(std::uint64_t n, std::uint64_t chunk_size, Fn&& fn) {
  if (n == 0) return;
  chunk_size = std::max<std::uint64_t>(chunk_size, 1);
  const std::uint64_t chunks = (n + chunk_size - 1) / chunk_size;
  const unsigned threads =
      static_cast<unsigned>(std::min<std::uint64_t>(worker_threads(), chunks));
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::uint64_t c = next.fetch_add(1);
      if (c >= chunks) return;
      try {
        const std::uint64_t first = c * chunk_size;
        fn(c, first, std::min(n, first + chunk_size));
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(chunks);
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
}

inline std::uint64_t chunk_count(std::uint64_t n, std::uint64_t chunk_size) {
  return n == 0 ? 0 : (n + chunk_size - 1) / chunk_size;
}

}  // namespace safexfer
