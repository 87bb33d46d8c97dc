#include "rfh/threads.hpp"

#include <atomic>

namespace rfh {

namespace {
std::atomic<int> g_threads{1};
}

void set_thread_count(int n) {
  if (n < 0) throw std::invalid_argument("thread count must be >= 0");
  if (n == 0) {
    unsigned hc = std::thread::hardware_concurrency();
    n = hc == 0 ? 1 : static_cast<int>(hc);
  }
  g_threads.store(n, std::memory_order_relaxed);
}

int thread_count() { return g_threads.load(std::memory_order_relaxed); }

namespace detail {
namespace {
thread_local bool g_in_worker = false;
}
bool in_parallel_worker() { return g_in_worker; }
void set_in_parallel_worker(bool v) { g_in_worker = v; }
}  // namespace detail

}  // namespace rfh

