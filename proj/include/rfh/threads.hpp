#pragma once

#include <cstddef>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <vector>

namespace rfh {

// Global worker count used by parallel_for. 0 means "use hardware_concurrency".
// Set once at startup (CLI --threads); results are bit-identical for a fixed value.
void set_thread_count(int n);
int thread_count();

namespace detail {
// True while the current thread is a parallel_for worker; nested parallel
// regions run serially instead of oversubscribing.
bool in_parallel_worker();
void set_in_parallel_worker(bool v);
}  // namespace detail

// Static block partition of [0, n): body(begin, end, chunk_index) runs on each chunk,
// chunk k covering a contiguous range. Chunks are assigned to threads in order, so a
// caller that writes per-chunk partials and folds them by chunk index gets the same
// floating-point result on every run with the same thread count.
template <class Body>
void parallel_for_chunks(std::size_t n, const Body& body) {
  int nt = thread_count();
  if (nt <= 1 || n < 2 || detail::in_parallel_worker()) {
    body(std::size_t{0}, n, std::size_t{0});
    return;
  }
  std::size_t nchunks = static_cast<std::size_t>(nt);
  if (nchunks > n) nchunks = n;
  std::size_t base = n / nchunks, rem = n % nchunks;
  std::vector<std::thread> pool;
  pool.reserve(nchunks);
  std::exception_ptr err;
  std::mutex err_mu;
  std::size_t begin = 0;
  for (std::size_t c = 0; c < nchunks; ++c) {
    std::size_t len = base + (c < rem ? 1 : 0);
    std::size_t end = begin + len;
    pool.emplace_back([&, begin, end, c] {
      detail::set_in_parallel_worker(true);
      try {
        body(begin, end, c);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!err) err = std::current_exception();
      }
    });
    begin = end;
  }
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

// Number of chunks parallel_for_chunks will use for a loop of length n,
// for sizing per-chunk partial buffers.
inline std::size_t chunk_count(std::size_t n) {
  int nt = thread_count();
  if (nt <= 1 || n < 2 || detail::in_parallel_worker()) return 1;
  std::size_t nchunks = static_cast<std::size_t>(nt);
  return nchunks > n ? n : nchunks;
}

// Convenience: element-wise parallel loop, no reduction.
template <class F>
void parallel_for(std::size_t n, const F& f) {
  parallel_for_chunks(n, [&](std::size_t b, std::size_t e, std::size_t) {
    for (std::size_t i = b; i < e; ++i) f(i);
  });
}

}  // namespace rfh
