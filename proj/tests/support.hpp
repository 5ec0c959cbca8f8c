// SPDX-License-Identifier: MIT
// Shared generators and comparisons for the test suite.

#pragma once

#include <electrovac/jet.hpp>
#include <electrovac/random.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

namespace evtest {

using electrovac::CounterRng;
using electrovac::Jet2;
using electrovac::Point;

/// Uniform point in [lo, hi]^n.
inline auto random_point(CounterRng& rng, std::size_t n, double lo, double hi) -> Point {
  std::vector<double> c(n);
  for (auto& x : c) x = rng.uniform(lo, hi);
  return Point(std::move(c));
}

/// Uniform point in the box, redrawn until `accept` holds.
inline auto random_point_where(CounterRng& rng, std::size_t n, double lo, double hi,
                               const std::function<bool(const Point&)>& accept) -> Point {
  for (;;) {
    auto p = random_point(rng, n, lo, hi);
    if (accept(p)) return p;
  }
}

inline auto min_distance(const Point& p, const std::vector<Point>& centers) -> double {
  double best = INFINITY;
  for (const auto& c : centers) {
    double r2 = 0.0;
    for (std::size_t k = 0; k < p.dim(); ++k) r2 += (p[k] - c[k]) * (p[k] - c[k]);
    best = std::min(best, std::sqrt(r2));
  }
  return best;
}

/// |a - b| / max(1, |a|, |b|)
inline auto rel_diff(double a, double b) -> double {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

struct JetDiff {
  double value = 0.0;
  double gradient = 0.0;
  double hessian = 0.0;
};

/// Blockwise max difference, each block scaled by max(1, largest entry of that block in `ref`).
inline auto jet_diff(const Jet2& got, const Jet2& ref) -> JetDiff {
  JetDiff d;
  d.value = rel_diff(got.value(), ref.value());
  double gs = 1.0, hs = 1.0, gd = 0.0, hd = 0.0;
  for (std::size_t i = 0; i < ref.dim(); ++i) {
    gs = std::max(gs, std::abs(ref.grad(i)));
    gd = std::max(gd, std::abs(got.grad(i) - ref.grad(i)));
    for (std::size_t j = 0; j < ref.dim(); ++j) {
      hs = std::max(hs, std::abs(ref.hess(i, j)));
      hd = std::max(hd, std::abs(got.hess(i, j) - ref.hess(i, j)));
    }
  }
  d.gradient = gd / gs;
  d.hessian = hd / hs;
  return d;
}

}  // namespace evtest
