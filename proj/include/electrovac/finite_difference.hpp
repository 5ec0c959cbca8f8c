// SPDX-License-Identifier: MIT
/**
    \file
    \brief central finite-difference jets, used as an oracle for the propagated jets

    fd_jet samples field values only. Gradients use the two-point central
    stencil; Hessians use the four-point mixed stencil with half-width h on every
    pair of axes, which for i == j reduces to (f(x+2h) - 2f(x) + f(x-2h)) / 4h^2.
    Its rounding error grows like eps |f| / h^2, about 2e-6 |f| at h = 1e-5.

    fd_jet_chained differences values for the gradient and propagated gradients
    for the Hessian, so each derivative order is checked against the one below
    it with rounding error of order eps / h.
*/

#pragma once

#include <electrovac/field.hpp>

#include <cmath>
#include <utility>
#include <vector>

namespace electrovac {

struct FdSteps {
  double gradient = 1e-5;
  double hessian = 1e-4;
};

inline auto fd_jet(const ScalarField& field, const Point& p, FdSteps steps = {}) -> Jet2 {
  if (!(steps.gradient > 0.0) || !(steps.hessian > 0.0)) {
    throw Error(ErrorCode::invalid_argument, "finite-difference steps must be positive");
  }
  auto f = [&](const Point& q) {
    const double v = field.value(q);
    if (!std::isfinite(v)) throw Error(ErrorCode::non_finite_result, "stencil value overflowed");
    return v;
  };
  // a single rounding per coordinate, so the i == j centre tap lands exactly on p
  auto offset = [&](std::size_t i, double di, std::size_t j, double dj) {
    std::vector<double> c(p.coords().begin(), p.coords().end());
    if (i == j) {
      c[i] += di + dj;
    } else {
      c[i] += di;
      c[j] += dj;
    }
    return Point(std::move(c));
  };

  const auto n = p.dim();
  Jet2 jet(n, f(p));
  const double hg = steps.gradient;
  for (std::size_t i = 0; i < n; ++i) {
    jet.set_grad(i, (f(p.shifted(i, hg)) - f(p.shifted(i, -hg))) / (2.0 * hg));
  }
  const double h = steps.hessian;
  const double denom = 4.0 * h * h;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const double pp = f(offset(i, h, j, h));
      const double pm = f(offset(i, h, j, -h));
      const double mp = f(offset(i, -h, j, h));
      const double mm = f(offset(i, -h, j, -h));
      jet.set_hess(i, j, (pp - pm - mp + mm) / denom);
    }
  }
  return jet;
}

/// Same step for gradient and Hessian.
inline auto fd_jet(const ScalarField& field, const Point& p, double h) -> Jet2 {
  return fd_jet(field, p, FdSteps{h, h});
}

/// Gradient from central differences of values, Hessian from central differences of
/// the propagated gradient (symmetrized).
inline auto fd_jet_chained(const ScalarField& field, const Point& p, double h) -> Jet2 {
  if (!(h > 0.0)) throw Error(ErrorCode::invalid_argument, "finite-difference step must be positive");
  const auto n = p.dim();
  Jet2 jet(n, field.value(p));
  std::vector<double> rows(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto plus = field.eval(p.shifted(i, h));
    const auto minus = field.eval(p.shifted(i, -h));
    jet.set_grad(i, (plus.value() - minus.value()) / (2.0 * h));
    for (std::size_t j = 0; j < n; ++j) rows[i * n + j] = (plus.grad(j) - minus.grad(j)) / (2.0 * h);
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) jet.set_hess(i, j, 0.5 * (rows[i * n + j] + rows[j * n + i]));
  }
  return jet;
}

}  // namespace electrovac
