#pragma once

#include <cstdint>
#include <string_view>

namespace ticketforge {

/// SplitMix64 finalizer. A bijection on 64-bit words.
std::uint64_t mix64(std::uint64_t x);

/// 64-bit FNV-1a over a byte string.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);

/// Counter-based random stream. Draw i of a stream is mix64(seed + (i+1)·γ),
/// so (seed, counter) fully determines every subsequent draw on any platform.
/// Real-valued draws are built from the raw words here rather than from
/// <random> distributions, whose algorithms are implementation-defined.
class RngState {
 public:
  RngState() = default;
  explicit RngState(std::uint64_t seed, std::uint64_t counter = 0)
      : seed_(seed), counter_(counter) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on [lo, hi).
  double uniform(double lo, double hi);
  /// Unbiased integer in [0, n); n > 0.
  std::uint64_t below(std::uint64_t n);
  /// Standard normal via Box-Muller (one draw per call, no cached pair).
  double normal();

  /// Independent child stream; does not advance this stream.
  RngState fork(std::uint64_t stream) const;
  RngState fork(std::string_view tag) const;
  RngState fork(std::string_view tag, std::uint64_t index) const;

  friend bool operator==(const RngState&, const RngState&) = default;

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t counter_ = 0;
};

/// Seed for run `index` of an experiment. mix64 is a bijection and the
/// pre-image steps by an odd constant, so seeds are pairwise distinct for
/// every index below 2^64.
std::uint64_t derive_run_seed(std::uint64_t master_seed, std::uint64_t index);

}  // namespace ticketforge
