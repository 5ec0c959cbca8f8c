// SPDX-License-Identifier: MIT
/**
    \file
    \brief second-order jets: value, gradient and Hessian of a scalar field at a point

    Jets are propagated forward through every arithmetic node, so a single
    evaluation yields F, F_{,i} and F_{,ij}. The Hessian is always built from its
    upper triangle and mirrored, which keeps it bitwise symmetric.
*/

#pragma once

#include <electrovac/error.hpp>

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace electrovac {

/// Cartesian point x = (x_1, ..., x_n) of R^n, n >= 3.
class Point {
 public:
  static constexpr std::size_t min_dimension = 3;

  Point() = default;

  explicit Point(std::vector<double> coords) : coords_(std::move(coords)) { validate(); }
  Point(std::initializer_list<double> coords) : coords_(coords) { validate(); }

  auto dim() const noexcept -> std::size_t { return coords_.size(); }
  auto operator[](std::size_t i) const -> double { return coords_[i]; }
  auto coords() const noexcept -> std::span<const double> { return coords_; }

  auto norm() const -> double {
    double s = 0.0;
    for (double x : coords_) s += x * x;
    return std::sqrt(s);
  }

  auto scaled(double s) const -> Point {
    auto c = coords_;
    for (double& x : c) x *= s;
    return Point(std::move(c));
  }

  auto shifted(std::size_t axis, double delta) const -> Point {
    auto c = coords_;
    c[axis] += delta;
    return Point(std::move(c));
  }

  friend auto operator==(const Point&, const Point&) -> bool = default;

 private:
  void validate() const {
    if (coords_.size() < min_dimension) {
      throw Error(ErrorCode::dimension_mismatch,
                  "points need n >= 3 coordinates, got " + std::to_string(coords_.size()));
    }
    for (double x : coords_) {
      if (!std::isfinite(x)) throw Error(ErrorCode::invalid_argument, "non-finite coordinate");
    }
  }

  std::vector<double> coords_;
};

/// Value and first two derivatives of a function of one variable.
struct Taylor2 {
  double value = 0.0;
  double first = 0.0;
  double second = 0.0;
};

class Jet2 {
 public:
  Jet2() = default;

  explicit Jet2(std::size_t n, double value = 0.0)
      : value_(value), gradient_(n, 0.0), hessian_(n * n, 0.0) {}

  static auto constant(std::size_t n, double c) -> Jet2 { return Jet2(n, c); }

  static auto coordinate(const Point& p, std::size_t axis) -> Jet2 {
    Jet2 j(p.dim(), p[axis]);
    j.gradient_[axis] = 1.0;
    return j;
  }

  auto dim() const noexcept -> std::size_t { return gradient_.size(); }

  auto value() const noexcept -> double { return value_; }
  auto grad(std::size_t i) const -> double { return gradient_[i]; }
  auto hess(std::size_t i, std::size_t j) const -> double { return hessian_[i * dim() + j]; }

  auto gradient() const noexcept -> std::span<const double> { return gradient_; }
  auto hessian() const noexcept -> std::span<const double> { return hessian_; }

  void set_value(double v) noexcept { value_ = v; }
  void set_grad(std::size_t i, double v) { gradient_[i] = v; }

  /// Writes both (i,j) and (j,i).
  void set_hess(std::size_t i, std::size_t j, double v) {
    hessian_[i * dim() + j] = v;
    hessian_[j * dim() + i] = v;
  }

  auto laplacian() const -> double {
    double s = 0.0;
    for (std::size_t i = 0; i < dim(); ++i) s += hess(i, i);
    return s;
  }

  auto grad_norm2() const -> double {
    double s = 0.0;
    for (double g : gradient_) s += g * g;
    return s;
  }

  auto all_finite() const -> bool {
    if (!std::isfinite(value_)) return false;
    for (double g : gradient_)
      if (!std::isfinite(g)) return false;
    for (double h : hessian_)
      if (!std::isfinite(h)) return false;
    return true;
  }

  friend auto operator==(const Jet2&, const Jet2&) -> bool = default;

 private:
  double value_ = 0.0;
  std::vector<double> gradient_;
  std::vector<double> hessian_;
};

namespace detail {

inline void require_same_dim(const Jet2& a, const Jet2& b) {
  if (a.dim() != b.dim()) throw Error(ErrorCode::dimension_mismatch, "jet dimensions differ");
}

}  // namespace detail

inline auto operator+(const Jet2& a, const Jet2& b) -> Jet2 {
  detail::require_same_dim(a, b);
  const auto n = a.dim();
  Jet2 r(n, a.value() + b.value());
  for (std::size_t i = 0; i < n; ++i) {
    r.set_grad(i, a.grad(i) + b.grad(i));
    for (std::size_t j = i; j < n; ++j) r.set_hess(i, j, a.hess(i, j) + b.hess(i, j));
  }
  return r;
}

inline auto operator*(double s, const Jet2& a) -> Jet2 {
  const auto n = a.dim();
  Jet2 r(n, s * a.value());
  for (std::size_t i = 0; i < n; ++i) {
    r.set_grad(i, s * a.grad(i));
    for (std::size_t j = i; j < n; ++j) r.set_hess(i, j, s * a.hess(i, j));
  }
  return r;
}

inline auto operator-(const Jet2& a) -> Jet2 { return -1.0 * a; }

inline auto operator-(const Jet2& a, const Jet2& b) -> Jet2 {
  detail::require_same_dim(a, b);
  const auto n = a.dim();
  Jet2 r(n, a.value() - b.value());
  for (std::size_t i = 0; i < n; ++i) {
    r.set_grad(i, a.grad(i) - b.grad(i));
    for (std::size_t j = i; j < n; ++j) r.set_hess(i, j, a.hess(i, j) - b.hess(i, j));
  }
  return r;
}

inline auto operator+(const Jet2& a, double c) -> Jet2 {
  Jet2 r = a;
  r.set_value(a.value() + c);
  return r;
}

/// Product rule to second order.
inline auto operator*(const Jet2& a, const Jet2& b) -> Jet2 {
  detail::require_same_dim(a, b);
  const auto n = a.dim();
  const double f = a.value();
  const double g = b.value();
  Jet2 r(n, f * g);
  for (std::size_t i = 0; i < n; ++i) {
    r.set_grad(i, f * b.grad(i) + g * a.grad(i));
    for (std::size_t j = i; j < n; ++j) {
      r.set_hess(i, j,
                 f * b.hess(i, j) + g * a.hess(i, j) + a.grad(i) * b.grad(j) +
                     a.grad(j) * b.grad(i));
    }
  }
  return r;
}

/// Chain rule for u(F): u'(F) dF and u'(F) d2F + u''(F) dF (x) dF.
inline auto compose(const Taylor2& outer, const Jet2& inner) -> Jet2 {
  const auto n = inner.dim();
  Jet2 r(n, outer.value);
  for (std::size_t i = 0; i < n; ++i) {
    r.set_grad(i, outer.first * inner.grad(i));
    for (std::size_t j = i; j < n; ++j) {
      r.set_hess(i, j,
                 outer.first * inner.hess(i, j) + outer.second * inner.grad(i) * inner.grad(j));
    }
  }
  return r;
}

inline auto reciprocal(const Jet2& a) -> Jet2 {
  const double v = a.value();
  return compose({1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v)}, a);
}

inline auto operator/(const Jet2& a, const Jet2& b) -> Jet2 { return a * reciprocal(b); }

/// Taylor coefficients of the elementary functions used by composite fields.
namespace unary {

inline auto log(double x) -> Taylor2 { return {std::log(x), 1.0 / x, -1.0 / (x * x)}; }
inline auto exp(double x) -> Taylor2 {
  const double e = std::exp(x);
  return {e, e, e};
}
inline auto sqrt(double x) -> Taylor2 {
  const double s = std::sqrt(x);
  return {s, 0.5 / s, -0.25 / (s * x)};
}
inline auto atan(double x) -> Taylor2 {
  const double d = 1.0 / (1.0 + x * x);
  return {std::atan(x), d, -2.0 * x * d * d};
}
inline auto pow(double x, double e) -> Taylor2 {
  const double v = std::pow(x, e);
  return {v, e * std::pow(x, e - 1.0), e * (e - 1.0) * std::pow(x, e - 2.0)};
}

}  // namespace unary

}  // namespace electrovac
