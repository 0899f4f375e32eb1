#include "ticketforge/rng.hpp"

#include <cmath>
#include <numbers>

namespace ticketforge {

namespace {
constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;
}

std::uint64_t mix64(std::uint64_t x) {
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis) {
  std::uint64_t h = basis;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t RngState::next_u64() {
  ++counter_;
  return mix64(seed_ + counter_ * kGamma);
}

double RngState::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngState::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform();
}

std::uint64_t RngState::below(std::uint64_t n) {
  // Lemire's multiply-shift with rejection.
  std::uint64_t x = next_u64();
  unsigned __int128 m = static_cast<unsigned __int128>(x) * n;
  auto low = static_cast<std::uint64_t>(m);
  if (low < n) {
    const std::uint64_t threshold = (0 - n) % n;
    while (low < threshold) {
      x = next_u64();
      m = static_cast<unsigned __int128>(x) * n;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

double RngState::normal() {
  // 1 - u keeps the log argument in (0, 1].
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

RngState RngState::fork(std::uint64_t stream) const {
  return RngState(mix64(seed_ ^ mix64(stream + kGamma)));
}

RngState RngState::fork(std::string_view tag) const {
  return fork(fnv1a64(tag));
}

RngState RngState::fork(std::string_view tag, std::uint64_t index) const {
  return fork(tag).fork(index);
}

std::uint64_t derive_run_seed(std::uint64_t master_seed, std::uint64_t index) {
  return mix64(master_seed + (index + 1) * kGamma);
}

}  // namespace ticketforge
