// SPDX-License-Identifier: MIT
/**
    \file
    \brief counter-based random stream keyed by a seed

    Draw i of stream (seed, key) is a pure function of (seed, key, i), so
    results do not depend on platform distributions or on evaluation order.
*/

#pragma once

#include <cmath>
#include <cstdint>

namespace electrovac {

inline constexpr auto splitmix64(std::uint64_t x) noexcept -> std::uint64_t {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t key = 0) noexcept
      : base_(splitmix64(seed ^ splitmix64(key + 0x632be59bd9b4e019ULL))) {}

  auto next_u64() noexcept -> std::uint64_t { return splitmix64(base_ + counter_++ * 0xd1b54a32d192ed03ULL); }

  /// Uniform on [0, 1) with 53 random bits.
  auto uniform() noexcept -> double { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  auto uniform(double lo, double hi) noexcept -> double { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller (one value per call).
  auto normal() noexcept -> double {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  auto draws() const noexcept -> std::uint64_t { return counter_; }

 private:
  std::uint64_t base_;
  std::uint64_t counter_ = 0;
};

}  // namespace electrovac
