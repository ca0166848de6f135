#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace theta_lab {

/// Worker count: THETA_LAB_JOBS if set, otherwise the hardware concurrency.
int default_jobs();
void set_default_jobs(int jobs);

/// Runs fn(chunk, begin, end) over fixed-size chunks of [0, count). Chunk
/// boundaries depend only on `count` and `chunk_size`, so reductions that
/// combine per-chunk results in chunk order are independent of the thread
/// count. The first exception thrown by any chunk is rethrown.
template <class Fn>
void parallel_chunks(std::size_t count, std::size_t chunk_size, Fn&& fn, int jobs = 0) {
  if (count == 0) return;
  if (chunk_size == 0) chunk_size = 1;
  const std::size_t chunks = (count + chunk_size - 1) / chunk_size;
  if (jobs <= 0) jobs = default_jobs();
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(jobs), chunks);

  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    for (;;) {
      const std::size_t c = next.fetch_add(1);
      if (c >= chunks) return;
      try {
        const std::size_t begin = c * chunk_size;
        fn(c, begin, std::min(count, begin + chunk_size));
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(chunks);
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t i = 0; i < workers; ++i) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
}

/// out[i] = fn(i) for i in [0, count).
template <class T, class Fn>
std::vector<T> parallel_map(std::size_t count, Fn&& fn, int jobs = 0) {
  std::vector<T> out(count);
  parallel_chunks(
      count, 64, [&](std::size_t, std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) out[i] = fn(i);
      },
      jobs);
  return out;
}

}  // namespace theta_lab
