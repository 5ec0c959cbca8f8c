// SPDX-License-Identifier: MIT
/**
    \file
    \brief a number that remembers the magnitude of the terms it was built from

    Residual formulas are written once as templates over the value type. With
    `double` they compute the residual; with `Tally` they also carry `scale`,
    the largest magnitude among the summands, which normalizes the residual
    into a condition-aware relative error.
*/

#pragma once

#include <algorithm>
#include <cmath>

namespace electrovac {

struct Tally {
  double value = 0.0;
  double scale = 0.0;

  constexpr Tally() = default;
  // NOLINTNEXTLINE(google-explicit-constructor): leaves convert implicitly
  Tally(double x) : value(x), scale(std::abs(x)) {}
  constexpr Tally(double v, double s) : value(v), scale(s) {}

  /// |value| / (1 + scale)
  auto normalized() const -> double { return std::abs(value) / (1.0 + scale); }
};

inline auto operator+(const Tally& a, const Tally& b) -> Tally { return {a.value + b.value, std::max(a.scale, b.scale)}; }
inline auto operator-(const Tally& a, const Tally& b) -> Tally { return {a.value - b.value, std::max(a.scale, b.scale)}; }
inline auto operator-(const Tally& a) -> Tally { return {-a.value, a.scale}; }
inline auto operator*(const Tally& a, const Tally& b) -> Tally { return {a.value * b.value, a.scale * b.scale}; }
inline auto operator/(const Tally& a, const Tally& b) -> Tally {
  return {a.value / b.value, a.scale / std::abs(b.value)};
}
inline auto operator+=(Tally& a, const Tally& b) -> Tally& { return a = a + b; }
inline auto operator-=(Tally& a, const Tally& b) -> Tally& { return a = a - b; }
inline auto operator*=(Tally& a, const Tally& b) -> Tally& { return a = a * b; }

inline auto value_of(double x) -> double { return x; }
inline auto value_of(const Tally& x) -> double { return x.value; }

}  // namespace electrovac
