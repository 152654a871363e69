#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

namespace steinlab {

// Running count / mean / centered sum of squares (Welford, merged with Chan's
// pairwise update).
struct Moments {
  std::uint64_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double value) noexcept {
    ++count;
    const double delta = value - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (value - mean);
  }

  void merge(const Moments& other) noexcept {
    if (other.count == 0) return;
    if (count == 0) {
      *this = other;
      return;
    }
    const double n_a = static_cast<double>(count);
    const double n_b = static_cast<double>(other.count);
    const double total = n_a + n_b;
    const double delta = other.mean - mean;
    mean += delta * (n_b / total);
    m2 += other.m2 + delta * delta * (n_a * n_b / total);
    count += other.count;
  }

  double variance() const noexcept {
    return count > 1 ? m2 / static_cast<double>(count - 1) : 0.0;
  }
  double std_error() const noexcept {
    return count > 0 ? std::sqrt(variance() / static_cast<double>(count)) : 0.0;
  }
};

struct ExecutionPolicy {
  // 0 selects std::thread::hardware_concurrency().
  unsigned threads = 0;

  unsigned resolved_threads() const noexcept;
};

// Replicates are grouped into blocks of this size. Block boundaries depend only
// on the replicate count, never on the thread count.
inline constexpr std::size_t kReplicateBlock = 2048;

template <std::size_t Channels>
struct BlockResult {
  std::array<Moments, Channels> moments{};
  std::uint64_t skipped = 0;
};

template <std::size_t Channels>
using BlockBody = std::function<void(std::uint64_t first, std::uint64_t last,
                                     BlockResult<Channels>& partial)>;

void parallel_for_blocks(std::uint64_t n_blocks, const ExecutionPolicy& policy,
                         const std::function<void(std::uint64_t)>& task);

/// Runs `body(first, last, partials)` over fixed replicate blocks and merges the
/// per-block moments with a pairwise tree in block order.
///
/// `body` receives a half-open replicate range and must add one sample per
/// channel per valid replicate into `partials`. Because each block is processed
/// sequentially and the merge tree is fixed, the result is bit-identical for
/// every thread count.
template <std::size_t Channels>
BlockResult<Channels> reduce_replicates(std::uint64_t n, const ExecutionPolicy& policy,
                                        const BlockBody<Channels>& body) {
  const std::uint64_t n_blocks = (n + kReplicateBlock - 1) / kReplicateBlock;
  std::vector<BlockResult<Channels>> partials(n_blocks);
  parallel_for_blocks(n_blocks, policy, [&](std::uint64_t block) {
    const std::uint64_t first = block * kReplicateBlock;
    const std::uint64_t last = std::min<std::uint64_t>(n, first + kReplicateBlock);
    body(first, last, partials[block]);
  });
  if (partials.empty()) return {};
  for (std::size_t stride = 1; stride < partials.size(); stride *= 2) {
    for (std::size_t i = 0; i + stride < partials.size(); i += 2 * stride) {
      for (std::size_t c = 0; c < Channels; ++c) {
        partials[i].moments[c].merge(partials[i + stride].moments[c]);
      }
      partials[i].skipped += partials[i + stride].skipped;
    }
  }
  return partials.front();
}

}  // namespace steinlab
