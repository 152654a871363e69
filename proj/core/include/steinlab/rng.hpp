#pragma once

#include <array>
#include <cstdint>

namespace steinlab {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
// A block is a pure function of (key, counter); no hidden state.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key) noexcept;

// SplitMix64 finalizer; used to derive independent sub-seeds from a seed.
std::uint64_t mix64(std::uint64_t x) noexcept;

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) noexcept {
  return mix64(seed ^ mix64(tag + 0x632be59bd9b4e019ULL));
}

/// Random stream for one Monte Carlo replicate.
///
/// The stream is keyed by the experiment seed and addressed by the replicate
/// index, so replicate i draws the same numbers no matter which thread runs it
/// or in which order replicates are visited.
class ReplicateStream {
 public:
  ReplicateStream(std::uint64_t seed, std::uint64_t replicate) noexcept;

  std::uint32_t next_u32() noexcept;
  std::uint64_t next_u64() noexcept;

  // Uniform on the open interval (0, 1) with 53 random bits.
  double uniform() noexcept;
  double normal() noexcept;
  // Gamma(shape, 1), Marsaglia–Tsang with the shape < 1 boost.
  double gamma(double shape) noexcept;
  double chi_square(double dof) noexcept { return 2.0 * gamma(0.5 * dof); }

 private:
  void refill() noexcept;

  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> counter_;
  std::array<std::uint32_t, 4> block_{};
  int used_ = 4;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

}  // namespace steinlab
