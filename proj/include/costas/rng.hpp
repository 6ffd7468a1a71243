#pragma once

// Counter-based random streams (splitmix64 finalizer).  Every draw is a
// pure function of (seed, stream, index), so Monte-Carlo trials can run
// out of order or in parallel and still reproduce bit-identically.

#include <cmath>
#include <cstdint>
#include <numbers>

namespace costas::rng {

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class Stream {
 public:
  Stream(std::uint64_t seed, std::uint64_t stream) noexcept
      : base_(mix64(seed ^ mix64(stream + 0x632be59bd9b4e019ULL))) {}

  // Uniform in (0, 1].
  double uniform(std::uint64_t index) const noexcept {
    const std::uint64_t bits = mix64(base_ ^ (index * 0xd1342543de82ef95ULL + 1));
    return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller, one value per index.
  double gaussian(std::uint64_t index) const noexcept {
    const double u1 = uniform(2 * index);
    const double u2 = uniform(2 * index + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  // QPSK data symbol in {1, 3, 5, 7}.
  int symbol(std::uint64_t index) const noexcept {
    return 1 + 2 * static_cast<int>(mix64(base_ + index * 0x9e3779b97f4a7c15ULL) & 3ULL);
  }

 private:
  std::uint64_t base_;
};

}  // namespace costas::rng
