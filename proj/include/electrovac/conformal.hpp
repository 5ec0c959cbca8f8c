// SPDX-License-Identifier: MIT
/**
    \file
    \brief curvature and differential operators of gbar = g / phi^2 over flat R^n

    All tensors are Cartesian components in the flat chart. Every operator is a
    template over the value type (double, or Tally for magnitude tracking) and
    takes the jets of phi and of the operand, so a caller evaluates each field
    once per point.
*/

#pragma once

#include <electrovac/error.hpp>
#include <electrovac/field.hpp>
#include <electrovac/jet.hpp>
#include <electrovac/tally.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

namespace electrovac {

template <class T = double>
class SymTensor {
 public:
  SymTensor() = default;
  explicit SymTensor(std::size_t n) : n_(n), data_(n * n, T(0.0)) {}

  auto dim() const noexcept -> std::size_t { return n_; }
  auto operator()(std::size_t i, std::size_t j) const -> const T& { return data_[i * n_ + j]; }
  void set(std::size_t i, std::size_t j, const T& v) {
    data_[i * n_ + j] = v;
    data_[j * n_ + i] = v;
  }

 private:
  std::size_t n_ = 0;
  std::vector<T> data_;
};

/// Gamma^k_{ij}, stored as [k][i][j].
template <class T = double>
class ChristoffelSymbols {
 public:
  explicit ChristoffelSymbols(std::size_t n) : n_(n), data_(n * n * n, T(0.0)) {}
  auto dim() const noexcept -> std::size_t { return n_; }
  auto operator()(std::size_t k, std::size_t i, std::size_t j) const -> const T& { return data_[(k * n_ + i) * n_ + j]; }
  void set(std::size_t k, std::size_t i, std::size_t j, const T& v) { data_[(k * n_ + i) * n_ + j] = v; }

 private:
  std::size_t n_;
  std::vector<T> data_;
};

namespace conformal {

inline void require_positive(const Jet2& phi) {
  if (!(phi.value() > 0.0)) {
    throw Error(ErrorCode::non_positive_conformal_factor, "conformal factor must be positive");
  }
}

inline void require_same_dim(const Jet2& phi, const Jet2& f) {
  if (phi.dim() != f.dim()) throw Error(ErrorCode::dimension_mismatch, "jets of different dimension");
}

/// gbar_{ij} = delta_{ij} / phi^2
inline auto metric(const Jet2& phi, std::size_t i, std::size_t j) -> double {
  return i == j ? 1.0 / (phi.value() * phi.value()) : 0.0;
}

/// Gamma^k_{ij} = 0 for distinct i,j,k; Gamma^i_{ij} = -phi_j/phi; Gamma^k_{ii} = phi_k/phi (k != i);
/// Gamma^i_{ii} = -phi_i/phi.
template <class T = double>
auto christoffel(const Jet2& phi) -> ChristoffelSymbols<T> {
  require_positive(phi);
  const auto n = phi.dim();
  const T f = phi.value();
  ChristoffelSymbols<T> g(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) {
        g.set(i, i, i, -T(phi.grad(i)) / f);
        for (std::size_t k = 0; k < n; ++k) {
          if (k != i) g.set(k, i, i, T(phi.grad(k)) / f);
        }
      } else {
        g.set(i, i, j, -T(phi.grad(j)) / f);
        g.set(j, i, j, -T(phi.grad(i)) / f);
      }
    }
  }
  return g;
}

/// (grad^2_gbar F)_{ij} = F_{,ij} + (phi_{,j} F_{,i} + phi_{,i} F_{,j}) / phi                (i != j)
/// (grad^2_gbar F)_{ii} = F_{,ii} + 2 phi_{,i} F_{,i} / phi - (1/phi) sum_k phi_{,k} F_{,k}
template <class T = double>
auto hessian(const Jet2& phi, const Jet2& F) -> SymTensor<T> {
  require_positive(phi);
  require_same_dim(phi, F);
  const auto n = phi.dim();
  const T f = phi.value();
  T dot(0.0);
  for (std::size_t k = 0; k < n; ++k) dot += T(phi.grad(k)) * T(F.grad(k));
  SymTensor<T> h(n);
  for (std::size_t i = 0; i < n; ++i) {
    h.set(i, i, T(F.hess(i, i)) + T(2.0) * T(phi.grad(i)) * T(F.grad(i)) / f - dot / f);
    for (std::size_t j = i + 1; j < n; ++j) {
      h.set(i, j, T(F.hess(i, j)) + (T(phi.grad(j)) * T(F.grad(i)) + T(phi.grad(i)) * T(F.grad(j))) / f);
    }
  }
  return h;
}

/// F_{,ij} - sum_k Gamma^k_{ij} F_{,k}; independent assembly used to check `hessian`.
template <class T = double>
auto hessian_via_christoffel(const Jet2& phi, const Jet2& F) -> SymTensor<T> {
  require_same_dim(phi, F);
  const auto gamma = christoffel<T>(phi);
  const auto n = phi.dim();
  SymTensor<T> h(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      T s = T(F.hess(i, j));
      for (std::size_t k = 0; k < n; ++k) s -= gamma(k, i, j) * T(F.grad(k));
      h.set(i, j, s);
    }
  }
  return h;
}

/// Delta_gbar F = sum_i [phi^2 F_{,ii} - (n-2) phi phi_{,i} F_{,i}]
template <class T = double>
auto laplacian(const Jet2& phi, const Jet2& F) -> T {
  require_positive(phi);
  require_same_dim(phi, F);
  const auto n = phi.dim();
  const T f = phi.value();
  const T nm2 = static_cast<double>(n) - 2.0;
  T s(0.0);
  for (std::size_t i = 0; i < n; ++i) s += f * f * T(F.hess(i, i)) - nm2 * f * T(phi.grad(i)) * T(F.grad(i));
  return s;
}

/// gbar(grad F, grad G) = phi^2 sum_i F_{,i} G_{,i}
template <class T = double>
auto inner(const Jet2& phi, const Jet2& F, const Jet2& G) -> T {
  require_positive(phi);
  require_same_dim(phi, F);
  require_same_dim(phi, G);
  const T f = phi.value();
  T s(0.0);
  for (std::size_t i = 0; i < phi.dim(); ++i) s += T(F.grad(i)) * T(G.grad(i));
  return f * f * s;
}

template <class T = double>
auto grad_norm2(const Jet2& phi, const Jet2& F) -> T {
  return inner<T>(phi, F, F);
}

/// Ric_gbar = ((n-2) phi grad^2 phi + [phi Delta phi - (n-1)|grad phi|^2] g) / phi^2
template <class T = double>
auto ricci(const Jet2& phi) -> SymTensor<T> {
  require_positive(phi);
  const auto n = phi.dim();
  const double nd = static_cast<double>(n);
  const T f = phi.value();
  T lap(0.0), g2(0.0);
  for (std::size_t k = 0; k < n; ++k) {
    lap += T(phi.hess(k, k));
    g2 += T(phi.grad(k)) * T(phi.grad(k));
  }
  const T iso = f * lap - T(nd - 1.0) * g2;
  SymTensor<T> r(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      T v = T(nd - 2.0) * f * T(phi.hess(i, j));
      if (i == j) v += iso;
      r.set(i, j, v / (f * f));
    }
  }
  return r;
}

/// R_gbar = (n-1)(2 phi Delta phi - n |grad phi|^2)
template <class T = double>
auto scalar_curvature(const Jet2& phi) -> T {
  require_positive(phi);
  const auto n = phi.dim();
  const double nd = static_cast<double>(n);
  const T f = phi.value();
  T lap(0.0), g2(0.0);
  for (std::size_t k = 0; k < n; ++k) {
    lap += T(phi.hess(k, k));
    g2 += T(phi.grad(k)) * T(phi.grad(k));
  }
  return T(nd - 1.0) * (T(2.0) * f * lap - T(nd) * g2);
}

/// gbar-trace of a covariant 2-tensor: phi^2 sum_i t_{ii}.
template <class T = double>
auto trace(const Jet2& phi, const SymTensor<T>& t) -> T {
  const T f = phi.value();
  T s(0.0);
  for (std::size_t i = 0; i < t.dim(); ++i) s += t(i, i);
  return f * f * s;
}

}  // namespace conformal

/// The conformal metric gbar = g / phi^2 attached to a field phi.
class ConformalFrame {
 public:
  explicit ConformalFrame(ScalarField phi) : phi_(std::move(phi)) {}

  auto phi() const noexcept -> const ScalarField& { return phi_; }

  auto phi_jet(const Point& p) const -> Jet2 {
    auto j = phi_.eval(p);
    conformal::require_positive(j);
    return j;
  }

  auto christoffel(const Point& p) const { return conformal::christoffel(phi_jet(p)); }
  auto hessian_bar(const ScalarField& F, const Point& p) const { return conformal::hessian(phi_jet(p), F.eval(p)); }
  auto laplacian_bar(const ScalarField& F, const Point& p) const -> double {
    return conformal::laplacian(phi_jet(p), F.eval(p));
  }
  auto ricci_bar(const Point& p) const { return conformal::ricci(phi_jet(p)); }
  auto scalar_curvature_bar(const Point& p) const -> double { return conformal::scalar_curvature(phi_jet(p)); }
  auto inner_bar(const ScalarField& F, const ScalarField& G, const Point& p) const -> double {
    return conformal::inner(phi_jet(p), F.eval(p), G.eval(p));
  }
  auto grad_norm_bar(const ScalarField& F, const Point& p) const -> double {
    return conformal::grad_norm2(phi_jet(p), F.eval(p));
  }

 private:
  ScalarField phi_;
};

}  // namespace electrovac
