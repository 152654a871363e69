#include "steinlab/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

namespace steinlab {

unsigned ExecutionPolicy::resolved_threads() const noexcept {
  if (threads > 0) return threads;
  return std::max(1U, std::thread::hardware_concurrency());
}

void parallel_for_blocks(std::uint64_t n_blocks, const ExecutionPolicy& policy,
                         const std::function<void(std::uint64_t)>& task) {
  const auto workers = static_cast<std::uint64_t>(
      std::min<std::uint64_t>(policy.resolved_threads(), n_blocks));
  if (workers <= 1) {
    for (std::uint64_t b = 0; b < n_blocks; ++b) task(b);
    return;
  }

  std::atomic<std::uint64_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::uint64_t b = next.fetch_add(1, std::memory_order_relaxed);
      if (b >= n_blocks) return;
      try {
        task(b);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(n_blocks, std::memory_order_relaxed);
        return;
      }
    }
  };

  std::vector<std::jthread> pool;
  pool.reserve(workers - 1);
  for (std::uint64_t t = 1; t < workers; ++t) pool.emplace_back(worker);
  worker();
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace steinlab
