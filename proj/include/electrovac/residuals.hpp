// SPDX-License-Identifier: MIT
/**
    \file
    \brief pointwise residuals of the electrostatic system (N, psi, phi, Lambda) on gbar = g / phi^2

    Two equivalent formulations are checked side by side:

      - covariant:  Delta N = 2N((n-2)/(n-1)|E|^2 - Lambda/(n-1)),  div E = 0,
                    grad^2 N = N(Ric - 2 Lambda/(n-1) gbar + 2 E (x) E - 2/(n-1)|E|^2 gbar),
                    plus the trace identity R = 2(|E|^2 + Lambda) and its Cartesian form;
      - Cartesian:  the four component equations in phi, N, psi and their partials.

    The electric field only enters through the potential, N E = grad_gbar psi, so
    d(N E^flat) = d(d psi) = 0 holds identically and is not evaluated.
*/

#pragma once

#include <electrovac/conformal.hpp>
#include <electrovac/error.hpp>
#include <electrovac/field.hpp>
#include <electrovac/jet.hpp>
#include <electrovac/tally.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <string_view>

namespace electrovac {

/// Candidate data (n, phi, N, psi, Lambda) for an electrostatic system.
struct SystemInstance {
  std::size_t n = 3;
  ScalarField phi;
  ScalarField lapse;
  ScalarField potential;
  double cosmological_constant = 0.0;
};

struct SystemJets {
  Jet2 phi;
  Jet2 lapse;
  Jet2 potential;
};

/// Evaluates phi, N, psi at p. Off-domain points (N <= 0, phi <= 0, singular) raise DomainViolation.
inline auto evaluate_system(const SystemInstance& sys, const Point& p) -> SystemJets {
  if (p.dim() != sys.n) {
    throw Error(ErrorCode::dimension_mismatch, "point dimension differs from system dimension");
  }
  SystemJets j;
  try {
    j.phi = sys.phi.eval(p);
    j.lapse = sys.lapse.eval(p);
    j.potential = sys.potential.eval(p);
  } catch (const Error& e) {
    switch (e.code()) {
      case ErrorCode::singular_point:
      case ErrorCode::non_finite_result:
      case ErrorCode::out_of_profile_range:
        throw Error(ErrorCode::domain_violation, e.what());
      default:
        throw;
    }
  }
  if (!(j.lapse.value() > 0.0)) throw Error(ErrorCode::domain_violation, "lapse N must be positive");
  if (!(j.phi.value() > 0.0)) throw Error(ErrorCode::domain_violation, "conformal factor phi must be positive");
  return j;
}

enum class Channel { lapse, maxwell, hessian_max, trace, lemma23, t1_offdiag, t1_diag, t1_psi, t1_N };

inline constexpr std::array<Channel, 9> all_channels = {
    Channel::lapse,   Channel::maxwell,    Channel::hessian_max, Channel::trace,  Channel::lemma23,
    Channel::t1_offdiag, Channel::t1_diag, Channel::t1_psi,      Channel::t1_N};

constexpr auto channel_name(Channel c) noexcept -> std::string_view {
  switch (c) {
    case Channel::lapse: return "lapse";
    case Channel::maxwell: return "maxwell";
    case Channel::hessian_max: return "hessian_max";
    case Channel::trace: return "trace";
    case Channel::lemma23: return "lemma23";
    case Channel::t1_offdiag: return "t1_offdiag";
    case Channel::t1_diag: return "t1_diag";
    case Channel::t1_psi: return "t1_psi";
    case Channel::t1_N: return "t1_N";
  }
  return "?";
}

/// Channels carried by the covariant equations (lapse, Maxwell, Hessian).
constexpr auto is_covariant_channel(Channel c) noexcept -> bool {
  return c == Channel::lapse || c == Channel::maxwell || c == Channel::hessian_max;
}

/// Channels of the Cartesian component equations.
constexpr auto is_cartesian_channel(Channel c) noexcept -> bool {
  return c == Channel::t1_offdiag || c == Channel::t1_diag || c == Channel::t1_psi || c == Channel::t1_N;
}

inline auto channel_from_name(std::string_view name) -> Channel {
  for (auto c : all_channels) {
    if (channel_name(c) == name) return c;
  }
  throw Error(ErrorCode::invalid_argument, "unknown residual channel '" + std::string(name) + "'");
}

struct ChannelResidual {
  double absolute = 0.0;
  double normalized = 0.0;  ///< |r| / (1 + max |summand|)
};

struct ResidualVector {
  std::array<ChannelResidual, all_channels.size()> values{};

  auto operator[](Channel c) const -> const ChannelResidual& { return values[static_cast<std::size_t>(c)]; }
  auto operator[](Channel c) -> ChannelResidual& { return values[static_cast<std::size_t>(c)]; }

  auto lapse() const -> double { return (*this)[Channel::lapse].absolute; }
  auto maxwell() const -> double { return (*this)[Channel::maxwell].absolute; }
  auto hessian_max() const -> double { return (*this)[Channel::hessian_max].absolute; }
  auto trace() const -> double { return (*this)[Channel::trace].absolute; }
  auto lemma23() const -> double { return (*this)[Channel::lemma23].absolute; }
  auto theo1_offdiag_max() const -> double { return (*this)[Channel::t1_offdiag].absolute; }
  auto theo1_diag_max() const -> double { return (*this)[Channel::t1_diag].absolute; }
  auto theo1_psi() const -> double { return (*this)[Channel::t1_psi].absolute; }
  auto theo1_N() const -> double { return (*this)[Channel::t1_N].absolute; }
};

/// Signed residual kernels, templated over double or Tally.
namespace kernels {

/// |E|^2_gbar = |grad_gbar psi|^2 / N^2
template <class T>
auto electric_norm2(const SystemJets& j) -> T {
  const T N = j.lapse.value();
  return conformal::grad_norm2<T>(j.phi, j.potential) / (N * N);
}

template <class T>
auto lapse(const SystemJets& j, std::size_t n, double Lambda) -> T {
  const double nd = static_cast<double>(n);
  const T N = j.lapse.value();
  const T e2 = electric_norm2<T>(j);
  return conformal::laplacian<T>(j.phi, j.lapse) -
         T(2.0) * N * (T((nd - 2.0) / (nd - 1.0)) * e2 - T(Lambda / (nd - 1.0)));
}

/// N Delta psi - gbar(grad psi, grad N)
template <class T>
auto maxwell(const SystemJets& j) -> T {
  const T N = j.lapse.value();
  return N * conformal::laplacian<T>(j.phi, j.potential) - conformal::inner<T>(j.phi, j.potential, j.lapse);
}

template <class T>
auto hessian(const SystemJets& j, std::size_t n, double Lambda) -> SymTensor<T> {
  const double nd = static_cast<double>(n);
  const T N = j.lapse.value();
  const T e2 = electric_norm2<T>(j);
  const auto hess = conformal::hessian<T>(j.phi, j.lapse);
  const auto ric = conformal::ricci<T>(j.phi);
  SymTensor<T> r(n);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a; b < n; ++b) {
      const double g = conformal::metric(j.phi, a, b);
      T rhs = ric(a, b) + T(2.0) * T(j.potential.grad(a)) * T(j.potential.grad(b)) / (N * N);
      if (a == b) rhs -= T(2.0 * Lambda / (nd - 1.0) * g) + T(2.0 / (nd - 1.0) * g) * e2;
      r.set(a, b, hess(a, b) - N * rhs);
    }
  }
  return r;
}

/// R - 2(|E|^2 + Lambda)
template <class T>
auto trace(const SystemJets& j, double Lambda) -> T {
  return conformal::scalar_curvature<T>(j.phi) - T(2.0) * (electric_norm2<T>(j) + T(Lambda));
}

/// sum_k [2(n-1) N phi_kk - n(n-1)(N/phi) phi_k^2 - 2 (phi/N) psi_k^2] - 2 N Lambda / phi
template <class T>
auto lemma23(const SystemJets& j, std::size_t n, double Lambda) -> T {
  const double nd = static_cast<double>(n);
  const T N = j.lapse.value();
  const T f = j.phi.value();
  T s(0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const T fk = j.phi.grad(k);
    const T pk = j.potential.grad(k);
    s += T(2.0 * (nd - 1.0)) * N * T(j.phi.hess(k, k)) - T(nd * (nd - 1.0)) * (N / f) * fk * fk -
         T(2.0) * (f / N) * pk * pk;
  }
  return s - T(2.0 * Lambda) * N / f;
}

/// (n-2) N phi_ij - phi N_ij - phi_i N_j - phi_j N_i + 2 (phi/N) psi_i psi_j,  i != j
template <class T>
auto cartesian_offdiag(const SystemJets& j, std::size_t n, std::size_t a, std::size_t b) -> T {
  const double nd = static_cast<double>(n);
  const T N = j.lapse.value();
  const T f = j.phi.value();
  return T(nd - 2.0) * N * T(j.phi.hess(a, b)) - f * T(j.lapse.hess(a, b)) -
         T(j.phi.grad(a)) * T(j.lapse.grad(b)) - T(j.phi.grad(b)) * T(j.lapse.grad(a)) +
         T(2.0) * (f / N) * T(j.potential.grad(a)) * T(j.potential.grad(b));
}

/// phi[(n-2) N phi_ii - phi N_ii - 2 phi_i N_i + 2(phi/N) psi_i^2]
///   + sum_k [phi phi_kk N + phi phi_k N_k - (n-1) N phi_k^2 - 2 phi^2 psi_k^2 / ((n-1) N)] - 2 Lambda N / (n-1)
template <class T>
auto cartesian_diag(const SystemJets& j, std::size_t n, double Lambda, std::size_t i) -> T {
  const double nd = static_cast<double>(n);
  const T N = j.lapse.value();
  const T f = j.phi.value();
  const T fi = j.phi.grad(i);
  const T pi = j.potential.grad(i);
  T s = f * (T(nd - 2.0) * N * T(j.phi.hess(i, i)) - f * T(j.lapse.hess(i, i)) - T(2.0) * fi * T(j.lapse.grad(i)) +
             T(2.0) * (f / N) * pi * pi);
  for (std::size_t k = 0; k < n; ++k) {
    const T fk = j.phi.grad(k);
    const T pk = j.potential.grad(k);
    s += f * T(j.phi.hess(k, k)) * N + f * fk * T(j.lapse.grad(k)) - T(nd - 1.0) * N * fk * fk -
         T(2.0) * f * f * pk * pk / (T(nd - 1.0) * N);
  }
  return s - T(2.0 * Lambda / (nd - 1.0)) * N;
}

/// sum_k [N phi psi_kk - (n-2) N phi_k psi_k - phi psi_k N_k]
template <class T>
auto cartesian_potential(const SystemJets& j, std::size_t n) -> T {
  const double nd = static_cast<double>(n);
  const T N = j.lapse.value();
  const T f = j.phi.value();
  T s(0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const T pk = j.potential.grad(k);
    s += N * f * T(j.potential.hess(k, k)) - T(nd - 2.0) * N * T(j.phi.grad(k)) * pk - f * pk * T(j.lapse.grad(k));
  }
  return s;
}

/// sum_k [phi^2 N N_kk - (n-2) phi phi_k N N_k - 2(n-2)/(n-1) phi^2 psi_k^2] + 2 Lambda N^2 / (n-1)
template <class T>
auto cartesian_lapse(const SystemJets& j, std::size_t n, double Lambda) -> T {
  const double nd = static_cast<double>(n);
  const T N = j.lapse.value();
  const T f = j.phi.value();
  T s(0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const T Nk = j.lapse.grad(k);
    const T pk = j.potential.grad(k);
    s += f * f * N * T(j.lapse.hess(k, k)) - T(nd - 2.0) * f * T(j.phi.grad(k)) * N * Nk -
         T(2.0 * (nd - 2.0) / (nd - 1.0)) * f * f * pk * pk;
  }
  return s + T(2.0 * Lambda / (nd - 1.0)) * N * N;
}

}  // namespace kernels

namespace detail {

inline auto to_channel(const Tally& t) -> ChannelResidual { return {std::abs(t.value), t.normalized()}; }

inline void take_max(ChannelResidual& acc, const Tally& t) {
  acc.absolute = std::max(acc.absolute, std::abs(t.value));
  acc.normalized = std::max(acc.normalized, t.normalized());
}

}  // namespace detail

/// All nine channels at once, from jets already evaluated.
inline auto evaluate_residuals(const SystemJets& j, std::size_t n, double Lambda) -> ResidualVector {
  ResidualVector r;
  r[Channel::lapse] = detail::to_channel(kernels::lapse<Tally>(j, n, Lambda));
  r[Channel::maxwell] = detail::to_channel(kernels::maxwell<Tally>(j));
  const auto h = kernels::hessian<Tally>(j, n, Lambda);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a; b < n; ++b) detail::take_max(r[Channel::hessian_max], h(a, b));
  }
  r[Channel::trace] = detail::to_channel(kernels::trace<Tally>(j, Lambda));
  r[Channel::lemma23] = detail::to_channel(kernels::lemma23<Tally>(j, n, Lambda));
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      detail::take_max(r[Channel::t1_offdiag], kernels::cartesian_offdiag<Tally>(j, n, a, b));
    }
    detail::take_max(r[Channel::t1_diag], kernels::cartesian_diag<Tally>(j, n, Lambda, a));
  }
  r[Channel::t1_psi] = detail::to_channel(kernels::cartesian_potential<Tally>(j, n));
  r[Channel::t1_N] = detail::to_channel(kernels::cartesian_lapse<Tally>(j, n, Lambda));
  return r;
}

inline auto evaluate_residuals(const SystemInstance& sys, const Point& p) -> ResidualVector {
  return evaluate_residuals(evaluate_system(sys, p), sys.n, sys.cosmological_constant);
}

inline auto residual_lapse(const SystemInstance& sys, const Point& p) -> double {
  return std::abs(kernels::lapse<double>(evaluate_system(sys, p), sys.n, sys.cosmological_constant));
}

inline auto residual_maxwell(const SystemInstance& sys, const Point& p) -> double {
  return std::abs(kernels::maxwell<double>(evaluate_system(sys, p)));
}

/// Signed residual tensor of the Hessian equation.
inline auto residual_hessian(const SystemInstance& sys, const Point& p) -> SymTensor<double> {
  return kernels::hessian<double>(evaluate_system(sys, p), sys.n, sys.cosmological_constant);
}

inline auto max_abs(const SymTensor<double>& t) -> double {
  double m = 0.0;
  for (std::size_t a = 0; a < t.dim(); ++a) {
    for (std::size_t b = a; b < t.dim(); ++b) m = std::max(m, std::abs(t(a, b)));
  }
  return m;
}

inline auto residual_trace(const SystemInstance& sys, const Point& p) -> double {
  return std::abs(kernels::trace<double>(evaluate_system(sys, p), sys.cosmological_constant));
}

inline auto residual_lemma23(const SystemInstance& sys, const Point& p) -> double {
  return std::abs(kernels::lemma23<double>(evaluate_system(sys, p), sys.n, sys.cosmological_constant));
}

struct CartesianResiduals {
  double offdiag_max = 0.0;
  double diag_max = 0.0;
  double potential = 0.0;
  double lapse = 0.0;
};

inline auto residual_theo1(const SystemInstance& sys, const Point& p) -> CartesianResiduals {
  const auto j = evaluate_system(sys, p);
  const auto n = sys.n;
  const double L = sys.cosmological_constant;
  CartesianResiduals r;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      r.offdiag_max = std::max(r.offdiag_max, std::abs(kernels::cartesian_offdiag<double>(j, n, a, b)));
    }
    r.diag_max = std::max(r.diag_max, std::abs(kernels::cartesian_diag<double>(j, n, L, a)));
  }
  r.potential = std::abs(kernels::cartesian_potential<double>(j, n));
  r.lapse = std::abs(kernels::cartesian_lapse<double>(j, n, L));
  return r;
}

}  // namespace electrovac
