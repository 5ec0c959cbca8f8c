// SPDX-License-Identifier: MIT
/**
    \file
    \brief reduction of the electrostatic system to ODEs along an invariant xi

    Two reductions are provided.

    MP class. U = 1/N composed with xi is flat-harmonic iff

        U''(xi) / U'(xi) = -h(xi),   h = Delta xi / |grad xi|^2,

    which needs h to be a function of xi alone. Its first integral is
    U' = k exp(-int h), solved here by adaptive quadrature and tabulated.

    Quadric ansatz. For xi = sum_k tau x_k^2 + gamma_k x_k + theta_k and
    s(xi) = 4 tau xi + beta = |grad xi|^2 the component equations become a
    second-order system in (phi, N, psi) of xi. Three equations are integrated
    (solved for phi'', N'', psi'') and the first-order one is monitored as a
    constraint.
*/

#pragma once

#include <electrovac/error.hpp>
#include <electrovac/field.hpp>
#include <electrovac/invariants.hpp>
#include <electrovac/jet.hpp>
#include <electrovac/residuals.hpp>
#include <electrovac/solutions.hpp>
#include <electrovac/tally.hpp>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <limits>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace electrovac {

// ---------------------------------------------------------------------------------------------
// quadrature

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;  ///< Gauss-Kronrod error estimate
};

/// int_a^b f by adaptive 15-point Gauss-Kronrod; QuadratureFailure unless the error estimate is <= abs_tol.
/// Boost's own stopping rule is relative to the L1 norm, so the relative target is derived from a coarse
/// first pass. It is floored at 1e-13: below that the summed estimate grows with depth (rounding noise).
template <class F>
auto integrate_adaptive(F&& f, double a, double b, double abs_tol = 1e-12, unsigned max_depth = 15)
    -> QuadratureResult {
  using gk = boost::math::quadrature::gauss_kronrod<double, 15>;
  if (a == b) return {0.0, 0.0};
  if (!std::isfinite(a) || !std::isfinite(b)) throw Error(ErrorCode::invalid_argument, "infinite quadrature bound");
  QuadratureResult r;
  try {
    double l1 = 0.0;
    r.value = gk::integrate(f, a, b, 0, 0.0, &r.error, &l1);
    if (!(r.error <= abs_tol)) {
      const double rel = std::max(0.1 * abs_tol / std::max(l1, std::numeric_limits<double>::min()), 1e-13);
      r.value = gk::integrate(f, a, b, max_depth, rel, &r.error, &l1);
    }
  } catch (const std::exception& e) {
    throw Error(ErrorCode::quadrature_failure, std::string("quadrature aborted: ") + e.what());
  }
  if (!std::isfinite(r.value) || !(r.error <= abs_tol)) {
    std::ostringstream msg;
    msg << "error estimate " << r.error << " above " << abs_tol << " on [" << a << ", " << b << "]";
    throw Error(ErrorCode::quadrature_failure, msg.str());
  }
  return r;
}

// ---------------------------------------------------------------------------------------------
// profiles

/// U(xi) = slope xi + intercept.
class AffineProfile final : public Profile1D {
 public:
  AffineProfile(double slope, double intercept) : slope_(slope), intercept_(intercept) {}
  auto eval(double xi) const -> Taylor2 override { return {slope_ * xi + intercept_, slope_, 0.0}; }

 private:
  double slope_;
  double intercept_;
};

/// U(xi) = sum_k c_k xi^k.
class PolynomialProfile final : public Profile1D {
 public:
  explicit PolynomialProfile(std::vector<double> coefficients) : c_(std::move(coefficients)) {
    if (c_.empty()) throw Error(ErrorCode::invalid_argument, "polynomial needs at least one coefficient");
  }
  auto eval(double xi) const -> Taylor2 override {
    Taylor2 r;
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) {
      r.second = r.second * xi + 2.0 * r.first;
      r.first = r.first * xi + r.value;
      r.value = r.value * xi + *it;
    }
    return r;
  }

 private:
  std::vector<double> c_;
};

namespace detail {

/// Quintic matching value, first and second derivative at both ends of [x0, x1].
inline auto quintic_hermite(double x0, const Taylor2& a, double x1, const Taylor2& b, double x) -> Taylor2 {
  const double h = x1 - x0;
  const double t = (x - x0) / h;
  const double c0 = a.value, c1 = h * a.first, c2 = 0.5 * h * h * a.second;
  const double A = b.value - (c0 + c1 + c2);
  const double B = h * b.first - (c1 + 2.0 * c2);
  const double C = h * h * b.second - 2.0 * c2;
  const double c3 = 10.0 * A - 4.0 * B + 0.5 * C;
  const double c4 = -15.0 * A + 7.0 * B - C;
  const double c5 = 6.0 * A - 3.0 * B + 0.5 * C;
  const double p = c0 + t * (c1 + t * (c2 + t * (c3 + t * (c4 + t * c5))));
  const double dp = c1 + t * (2.0 * c2 + t * (3.0 * c3 + t * (4.0 * c4 + t * 5.0 * c5)));
  const double d2p = 2.0 * c2 + t * (6.0 * c3 + t * (12.0 * c4 + t * 20.0 * c5));
  return {p, dp / h, d2p / (h * h)};
}

}  // namespace detail

/// Piecewise quintic Hermite interpolant of (f, f', f'') on an increasing grid.
class TabulatedProfile final : public Profile1D {
 public:
  TabulatedProfile(std::vector<double> xi, std::vector<double> f, std::vector<double> df, std::vector<double> d2f)
      : xi_(std::move(xi)), f_(std::move(f)), df_(std::move(df)), d2f_(std::move(d2f)) {
    if (xi_.size() < 2 || f_.size() != xi_.size() || df_.size() != xi_.size() || d2f_.size() != xi_.size()) {
      throw Error(ErrorCode::invalid_argument, "tabulated profile needs >= 2 nodes with matching columns");
    }
    for (std::size_t i = 1; i < xi_.size(); ++i) {
      if (!(xi_[i] > xi_[i - 1])) throw Error(ErrorCode::invalid_argument, "profile grid must increase strictly");
    }
  }

  auto lower() const -> double override { return xi_.front(); }
  auto upper() const -> double override { return xi_.back(); }

  auto eval(double x) const -> Taylor2 override {
    if (!(x >= xi_.front() && x <= xi_.back())) {
      throw Error(ErrorCode::out_of_profile_range,
                  "xi = " + std::to_string(x) + " outside [" + std::to_string(xi_.front()) + ", " +
                      std::to_string(xi_.back()) + "]");
    }
    auto it = std::upper_bound(xi_.begin(), xi_.end(), x);
    std::size_t i = it == xi_.begin() ? 0 : static_cast<std::size_t>(it - xi_.begin()) - 1;
    if (i + 1 >= xi_.size()) i = xi_.size() - 2;
    return detail::quintic_hermite(xi_[i], {f_[i], df_[i], d2f_[i]}, xi_[i + 1], {f_[i + 1], df_[i + 1], d2f_[i + 1]},
                                   x);
  }

  auto nodes() const noexcept -> const std::vector<double>& { return xi_; }
  auto values() const noexcept -> const std::vector<double>& { return f_; }
  auto first() const noexcept -> const std::vector<double>& { return df_; }
  auto second() const noexcept -> const std::vector<double>& { return d2f_; }

 private:
  std::vector<double> xi_, f_, df_, d2f_;
};

// ---------------------------------------------------------------------------------------------
// MP lapse along an invariant

inline constexpr double default_eps_grad = 1e-10;

struct LapseOdeResidual {
  double ode = 0.0;        ///< |U''/U' + Delta xi / |grad xi|^2|
  double harmonic = 0.0;   ///< |Delta (U o xi)| / (|U'| |grad xi|^2)
  double laplacian = 0.0;  ///< Delta (U o xi), unscaled
};

/// Both forms of the MP lapse equation at p, computed independently.
inline auto lapse_ode_check(const Profile1D& U, const ScalarField& xi, const Point& p,
                            double eps_grad = default_eps_grad) -> LapseOdeResidual {
  const auto j = xi.eval(p);
  const double g2 = j.grad_norm2();
  if (!(std::sqrt(g2) > eps_grad)) throw Error(ErrorCode::degenerate_gradient, "|grad xi| below eps_grad");
  const auto u = U.eval(j.value());
  if (u.first == 0.0 || !std::isfinite(u.first)) throw Error(ErrorCode::stationary_lapse, "U'(xi) = 0");
  LapseOdeResidual r;
  r.ode = std::abs(u.second / u.first + j.laplacian() / g2);
  r.laplacian = compose(u, j).laplacian();
  r.harmonic = std::abs(r.laplacian) / (std::abs(u.first) * g2);
  return r;
}

inline auto lapse_ode_residual(const Profile1D& U, const ScalarField& xi, const Point& p,
                               double eps_grad = default_eps_grad) -> double {
  return lapse_ode_check(U, xi, p, eps_grad).ode;
}

inline auto lapse_ode_residual(const Profile1D& U, const AnyInvariant& inv, const Point& p,
                               double eps_grad = default_eps_grad) -> double {
  return lapse_ode_residual(U, invariant_field(inv), p, eps_grad);
}

struct LapseSolveOptions {
  double xi_begin = -1.0;
  double xi_end = 1.0;
  /// Initial uniform grid; intervals are bisected until the midpoint interpolant matches quadrature.
  std::size_t intervals = 32;
  /// Midpoint check on U, U', U'' relative to max(1, |reference|).
  double interpolation_tol = 1e-11;
  std::size_t max_nodes = 100000;
  double abs_tol = 1e-12;
  double closed_form_tol = 1e-10;
  /// When set, separability_check runs on `separability_levels` levels spread over the interval.
  std::optional<SeparabilityOptions> separability;
  std::size_t separability_levels = 5;
  std::size_t samples_per_level = 20;
  std::uint64_t seed = 0;
};

struct LapseSolution {
  std::shared_ptr<const TabulatedProfile> profile;
  /// Dilation invariants only.
  std::shared_ptr<const ArctanProfile> closed_form;
  double closed_form_max_deviation = std::numeric_limits<double>::quiet_NaN();
  /// max |W_exp - 1/Q| / (1/Q) over the grid, dilation only.
  double weight_path_max_deviation = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

struct FirstIntegralSetup {
  std::function<double(double)> h;  ///< Delta xi / |grad xi|^2 as a function of xi
  double anchor = 0.0;              ///< where W and F are normalized
  double weight_at_anchor = 1.0;    ///< W(anchor)
};

inline auto first_integral_setup(const AnyInvariant& inv, const LapseSolveOptions& opt) -> FirstIntegralSetup {
  FirstIntegralSetup s;
  if (!level_ratio(inv, opt.xi_begin).has_value()) {
    throw Error(ErrorCode::not_separable, "invariant has no closed-form ratio Delta xi / |grad xi|^2");
  }
  s.h = [inv](double xi) { return *level_ratio(inv, xi); };
  s.anchor = opt.xi_begin;
  if (const auto* d = std::get_if<DilationInvariant>(&inv)) {
    const auto q = d->quadratic_coefficients();
    s.anchor = -q.theta / (2.0 * q.eta);  // centre of the arctan
    s.weight_at_anchor = 1.0 / q(s.anchor);
  } else if (std::holds_alternative<HarmonicPoleInvariant>(inv)) {
    s.anchor = 0.0;
  } else if (const auto* qd = std::get_if<QuadricInvariant>(&inv)) {
    if (qd->tau() == 0.0) {
      s.anchor = 0.0;
    } else {
      const double root = -qd->beta() / (4.0 * qd->tau());
      const double lo = opt.xi_begin, hi = opt.xi_end;
      if (root >= lo && root <= hi) {
        throw Error(ErrorCode::singular_coefficient, "s(xi) = 4 tau xi + beta vanishes inside the interval");
      }
    }
  }
  return s;
}

}  // namespace detail

/// Tabulates U with U' = k exp(-int h), U = k1 + k int W, on [xi_begin, xi_end].
/// Normalization: dilation W(xi*) = 1/Q(xi*), int from xi* = -theta/(2 eta) (matches the arctan form);
/// pole and translation quadric W = 1, int from 0; rotation quadric W(xi_begin) = 1, int from xi_begin.
inline auto solve_lapse_from_invariant(const AnyInvariant& inv, double k, double k1, const LapseSolveOptions& opt)
    -> LapseSolution {
  if (k == 0.0) throw Error(ErrorCode::zero_slope, "k must be nonzero");
  if (!(opt.xi_end > opt.xi_begin)) throw Error(ErrorCode::invalid_argument, "need xi_begin < xi_end");
  if (opt.intervals < 1) throw Error(ErrorCode::invalid_argument, "need at least one interval");
  if (opt.separability) {
    std::vector<double> levels;
    const auto m = std::max<std::size_t>(opt.separability_levels, 1);
    for (std::size_t i = 0; i < m; ++i) {
      const double t = m == 1 ? 0.5 : static_cast<double>(i) / static_cast<double>(m - 1);
      levels.push_back(opt.xi_begin + t * (opt.xi_end - opt.xi_begin));
    }
    const auto report =
        separability_check(invariant_field(inv), levels, opt.samples_per_level, opt.seed, *opt.separability);
    if (!report.separable) throw Error(ErrorCode::not_separable, "Delta xi / |grad xi|^2 varies on a level set");
  }
  const auto setup = detail::first_integral_setup(inv, opt);
  const auto& h = setup.h;
  const double tol = opt.abs_tol;

  // W at the anchor, then at the grid start; integrate forward node by node
  auto weight_from = [&](double from, double w_from, double to) {
    return w_from * std::exp(-integrate_adaptive(h, from, to, tol).value);
  };
  auto antiderivative = [&](double from, double w_from, double to) {
    auto W = [&](double s) { return weight_from(from, w_from, s); };
    return integrate_adaptive(W, from, to, tol).value;
  };

  struct Node {
    double xi, F, w;
  };
  auto advance = [&](const Node& from, double to) -> Node {
    return {to, from.F + antiderivative(from.xi, from.w, to), weight_from(from.xi, from.w, to)};
  };
  auto taylor = [&](const Node& nd) -> Taylor2 {
    const double du = k * nd.w;
    return {k1 + k * nd.F, du, -h(nd.xi) * du};
  };
  auto close = [&](const Taylor2& got, const Taylor2& ref) {
    auto ok = [&](double g, double r) { return std::abs(g - r) <= opt.interpolation_tol * std::max(1.0, std::abs(r)); };
    return ok(got.value, ref.value) && ok(got.first, ref.first) && ok(got.second, ref.second);
  };

  const double x0 = opt.xi_begin;
  std::vector<Node> nodes;
  nodes.push_back({x0, antiderivative(setup.anchor, setup.weight_at_anchor, x0),
                   weight_from(setup.anchor, setup.weight_at_anchor, x0)});
  const std::size_t m = opt.intervals;
  for (std::size_t i = 1; i <= m; ++i) {
    const double target =
        i == m ? opt.xi_end : x0 + (opt.xi_end - x0) * static_cast<double>(i) / static_cast<double>(m);
    // bisect [left, target] until the midpoint test passes, then accept and move on
    std::vector<double> pending{target};
    while (!pending.empty()) {
      const Node& left = nodes.back();
      const double right_xi = pending.back();
      const Node right = advance(left, right_xi);
      const double mid_xi = 0.5 * (left.xi + right_xi);
      const auto mid_ref = taylor(advance(left, mid_xi));
      const auto mid_got = detail::quintic_hermite(left.xi, taylor(left), right_xi, taylor(right), mid_xi);
      if (close(mid_got, mid_ref) || !(mid_xi > left.xi && mid_xi < right_xi)) {
        nodes.push_back(right);
        pending.pop_back();
      } else {
        pending.push_back(mid_xi);
      }
      if (nodes.size() + pending.size() > opt.max_nodes) {
        throw Error(ErrorCode::quadrature_failure, "lapse tabulation exceeded max_nodes");
      }
    }
  }

  std::vector<double> xs, U, dU, d2U;
  for (const auto& nd : nodes) {
    const auto t = taylor(nd);
    xs.push_back(nd.xi);
    U.push_back(t.value);
    dU.push_back(t.first);
    d2U.push_back(t.second);
  }

  LapseSolution sol;
  sol.profile = std::make_shared<TabulatedProfile>(xs, U, dU, d2U);
  if (const auto* d = std::get_if<DilationInvariant>(&inv)) {
    const auto q = d->quadratic_coefficients();
    sol.closed_form = std::make_shared<ArctanProfile>(q, k, k1);
    double dev = 0.0, wdev = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      dev = std::max(dev, std::abs(U[i] - sol.closed_form->eval(xs[i]).value));
      wdev = std::max(wdev, std::abs(dU[i] / k * q(xs[i]) - 1.0));
      if (i + 1 < xs.size()) {
        const double mid = 0.5 * (xs[i] + xs[i + 1]);
        dev = std::max(dev, std::abs(sol.profile->eval(mid).value - sol.closed_form->eval(mid).value));
      }
    }
    sol.closed_form_max_deviation = dev;
    sol.weight_path_max_deviation = wdev;
    if (!(dev <= opt.closed_form_tol)) {
      std::ostringstream msg;
      msg << "tabulated lapse deviates from the arctan closed form by " << dev;
      throw Error(ErrorCode::quadrature_failure, msg.str());
    }
  }
  return sol;
}

// ---------------------------------------------------------------------------------------------
// quadric reduced system

struct QuadricParams {
  std::size_t n = 3;
  double tau = 0.0;
  double beta = 1.0;
  double Lambda = 0.0;

  auto s(double xi) const noexcept -> double { return 4.0 * tau * xi + beta; }
};

inline auto quadric_params(const QuadricInvariant& inv, double Lambda = 0.0) -> QuadricParams {
  if (!inv.identity_outer()) throw Error(ErrorCode::invalid_argument, "reduced system needs Gamma = identity");
  return {inv.dim(), inv.tau(), inv.beta(), Lambda};
}

struct QuadricODEState {
  double xi = 0.0;
  double phi = 1.0, dphi = 0.0;
  double N = 1.0, dN = 0.0;
  double psi = 0.0, dpsi = 0.0;
};

struct SecondDerivatives {
  double phi = 0.0, N = 0.0, psi = 0.0;
};

/// phi'', N'', psi'' from the evolution set.
inline auto quadric_second_derivatives(const QuadricParams& P, const QuadricODEState& y) -> SecondDerivatives {
  const double nd = static_cast<double>(P.n);
  const double s = P.s(y.xi);
  const double f = y.phi, N = y.N;
  SecondDerivatives d;
  d.N = ((nd - 2.0) * y.dphi * N * y.dN + 2.0 * (nd - 2.0) / (nd - 1.0) * f * y.dpsi * y.dpsi -
         2.0 * nd * P.tau * f * N * y.dN / s - 2.0 * P.Lambda * N * N / ((nd - 1.0) * f * s)) /
        (f * N);
  d.psi = ((nd - 2.0) * y.dphi * y.dpsi * N + f * y.dpsi * y.dN - 2.0 * nd * P.tau * f * y.dpsi * N / s) / (f * N);
  d.phi = (f * d.N + 2.0 * y.dphi * y.dN - 2.0 * f * y.dpsi * y.dpsi / N) / ((nd - 2.0) * N);
  return d;
}

/// [phi phi'' N - (n-1) phi'^2 N + phi phi' N' - 2 phi^2 psi'^2 / ((n-1) N)] s
///   + 2 tau phi [2(n-1) phi' N - phi N'] - 2 Lambda N / (n-1), as value and summand scale.
inline auto quadric_constraint(const QuadricParams& P, const QuadricODEState& y) -> Tally {
  const double nd = static_cast<double>(P.n);
  const auto dd = quadric_second_derivatives(P, y);
  const Tally f = y.phi, N = y.N, df = y.dphi, dN = y.dN, dpsi = y.dpsi, s = P.s(y.xi);
  const Tally bracket = f * Tally(dd.phi) * N - Tally(nd - 1.0) * df * df * N + f * df * dN -
                        Tally(2.0) * f * f * dpsi * dpsi / (Tally(nd - 1.0) * N);
  return bracket * s + Tally(2.0 * P.tau) * f * (Tally(2.0 * (nd - 1.0)) * df * N - f * dN) -
         Tally(2.0 * P.Lambda / (nd - 1.0)) * N;
}

/// psi' making the constraint vanish, given the other fields (the constraint is affine in psi'^2).
inline auto solve_constraint_for_dpsi(const QuadricParams& P, QuadricODEState y, int sign = 1) -> double {
  require_sign(sign);
  y.dpsi = 0.0;
  const double c0 = quadric_constraint(P, y).value;
  y.dpsi = 1.0;
  const double c1 = quadric_constraint(P, y).value - c0;
  if (c1 == 0.0) throw Error(ErrorCode::inconsistent_initial_data, "constraint does not depend on psi'");
  const double q = -c0 / c1;
  if (q < 0.0) throw Error(ErrorCode::inconsistent_initial_data, "constraint needs psi'^2 < 0");
  return static_cast<double>(sign) * std::sqrt(q);
}

struct QuadricIntegrationOptions {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  double initial_constraint_tol = 1e-10;  ///< on the normalized constraint
  double drift_tol = 1e-6;
  /// Upper bound on |step|; 0 picks |xi_end - xi_0| / 256.
  double max_step = 0.0;
  std::size_t max_steps = 1000000;
};

struct QuadricTrajectory {
  QuadricParams params;
  std::vector<QuadricODEState> states;
  std::vector<double> constraint;  ///< normalized constraint residual per state
  double max_constraint = 0.0;
  std::size_t rejected_steps = 0;
};

inline auto integrate_quadric_system(const QuadricParams& P, const QuadricODEState& initial, double xi_end,
                                     const QuadricIntegrationOptions& opt = {}) -> QuadricTrajectory {
  namespace odeint = boost::numeric::odeint;
  using State = std::array<double, 6>;  // phi, phi', N, N', psi, psi'

  if (P.n < Point::min_dimension) throw Error(ErrorCode::dimension_mismatch, "need n >= 3");
  const double xi0 = initial.xi;
  if (xi_end == xi0) throw Error(ErrorCode::invalid_argument, "empty integration interval");
  const double s_eps = 1e-12 * (1.0 + std::abs(P.beta) + 4.0 * std::abs(P.tau * xi0));
  if (std::abs(P.s(xi0)) <= s_eps) throw Error(ErrorCode::singular_coefficient, "s(xi0) = 0");
  if (P.tau != 0.0) {
    const double root = -P.beta / (4.0 * P.tau);
    if ((root - xi0) * (root - xi_end) <= 0.0) {
      throw Error(ErrorCode::singular_coefficient, "s(xi) = 4 tau xi + beta vanishes on the interval");
    }
  }
  if (!(initial.N > 0.0) || !(initial.phi > 0.0)) {
    throw Error(ErrorCode::inconsistent_initial_data, "initial N and phi must be positive");
  }
  const double c_init = quadric_constraint(P, initial).normalized();
  if (!(c_init <= opt.initial_constraint_tol)) {
    throw Error(ErrorCode::inconsistent_initial_data,
                "initial data violate the first-order constraint by " + std::to_string(c_init));
  }

  auto to_state = [](const QuadricODEState& q) -> State { return {q.phi, q.dphi, q.N, q.dN, q.psi, q.dpsi}; };
  auto from_state = [](const State& x, double xi) {
    return QuadricODEState{xi, x[0], x[1], x[2], x[3], x[4], x[5]};
  };
  auto rhs = [&](const State& x, State& dx, double xi) {
    const auto d = quadric_second_derivatives(P, from_state(x, xi));
    dx = {x[1], d.phi, x[3], d.N, x[5], d.psi};
  };

  auto stepper = odeint::make_controlled(opt.abs_tol, opt.rel_tol, odeint::runge_kutta_dopri5<State>());
  const double dir = xi_end > xi0 ? 1.0 : -1.0;
  const double span = std::abs(xi_end - xi0);
  const double max_step = opt.max_step > 0.0 ? opt.max_step : span / 256.0;

  QuadricTrajectory traj;
  traj.params = P;
  traj.states.push_back(initial);
  traj.constraint.push_back(c_init);
  traj.max_constraint = c_init;

  State x = to_state(initial);
  double xi = xi0;
  double dt = dir * std::min(max_step, span / 16.0);
  std::size_t steps = 0;
  while (dir * (xi_end - xi) > 0.0) {
    if (++steps > opt.max_steps) throw Error(ErrorCode::step_failure, "step budget exhausted");
    double cap = max_step;
    if (P.tau != 0.0) cap = std::min(cap, 0.5 * std::abs(P.s(xi)) / (4.0 * std::abs(P.tau)));
    const double remaining = std::abs(xi_end - xi);
    dt = dir * std::min({std::abs(dt), cap, remaining});
    const bool last = std::abs(dt) == remaining;
    const auto result = stepper.try_step(rhs, x, xi, dt);
    if (result == odeint::fail) {
      ++traj.rejected_steps;
      if (std::abs(dt) < 1e-14 * (1.0 + std::abs(xi))) throw Error(ErrorCode::step_failure, "step size underflow");
      continue;
    }
    if (last || dir * (xi_end - xi) <= 1e-14 * (1.0 + std::abs(xi_end))) xi = xi_end;
    for (double v : x) {
      if (!std::isfinite(v)) throw Error(ErrorCode::step_failure, "non-finite state");
    }
    if (!(x[0] > 0.0) || !(x[2] > 0.0)) {
      throw Error(ErrorCode::step_failure, "phi or N left the positive range at xi = " + std::to_string(xi));
    }
    const auto q = from_state(x, xi);
    const double c = quadric_constraint(P, q).normalized();
    traj.states.push_back(q);
    traj.constraint.push_back(c);
    traj.max_constraint = std::max(traj.max_constraint, c);
    if (c > opt.drift_tol) {
      throw Error(ErrorCode::constraint_drift, "constraint residual " + std::to_string(c) + " at xi = " +
                                                   std::to_string(xi));
    }
  }
  return traj;
}

inline void write_trajectory_csv(std::ostream& os, const QuadricTrajectory& traj) {
  os << "xi,phi,dphi,N,dN,psi,dpsi,constraint_residual\n";
  os << std::setprecision(17);
  for (std::size_t i = 0; i < traj.states.size(); ++i) {
    const auto& s = traj.states[i];
    os << s.xi << ',' << s.phi << ',' << s.dphi << ',' << s.N << ',' << s.dN << ',' << s.psi << ',' << s.dpsi << ','
       << traj.constraint[i] << '\n';
  }
}

inline void write_profile_csv(std::ostream& os, const LapseSolution& sol) {
  os << "xi,U,dU,d2U";
  if (sol.closed_form) os << ",U_closed_form";
  os << '\n' << std::setprecision(17);
  const auto& p = *sol.profile;
  for (std::size_t i = 0; i < p.nodes().size(); ++i) {
    os << p.nodes()[i] << ',' << p.values()[i] << ',' << p.first()[i] << ',' << p.second()[i];
    if (sol.closed_form) os << ',' << sol.closed_form->eval(p.nodes()[i]).value;
    os << '\n';
  }
}

struct LiftedProfiles {
  std::shared_ptr<const TabulatedProfile> phi, N, psi;
};

/// Tabulates phi, N, psi of a trajectory with second derivatives taken from the ODE.
inline auto tabulate_trajectory(const QuadricTrajectory& traj) -> LiftedProfiles {
  auto states = traj.states;
  if (states.size() < 2) throw Error(ErrorCode::invalid_argument, "trajectory needs at least two states");
  if (states.front().xi > states.back().xi) std::reverse(states.begin(), states.end());
  const auto m = states.size();
  std::vector<double> xs(m), f(m), df(m), d2f(m), N(m), dN(m), d2N(m), p(m), dp(m), d2p(m);
  for (std::size_t i = 0; i < m; ++i) {
    const auto& s = states[i];
    const auto dd = quadric_second_derivatives(traj.params, s);
    xs[i] = s.xi;
    f[i] = s.phi, df[i] = s.dphi, d2f[i] = dd.phi;
    N[i] = s.N, dN[i] = s.dN, d2N[i] = dd.N;
    p[i] = s.psi, dp[i] = s.dpsi, d2p[i] = dd.psi;
  }
  return {std::make_shared<TabulatedProfile>(xs, f, df, d2f), std::make_shared<TabulatedProfile>(xs, N, dN, d2N),
          std::make_shared<TabulatedProfile>(xs, p, dp, d2p)};
}

/// phi(xi(x)), N(xi(x)), psi(xi(x)); points with xi outside the profile grid raise OutOfProfileRange.
inline auto lift_profile_to_fields(const std::shared_ptr<const Profile1D>& phi, const std::shared_ptr<const Profile1D>& N,
                                   const std::shared_ptr<const Profile1D>& psi, const ScalarField& xi, std::size_t n,
                                   double Lambda = 0.0) -> SystemInstance {
  return SystemInstance{n, fields::compose(phi, xi), fields::compose(N, xi), fields::compose(psi, xi), Lambda};
}

inline auto lift_profile_to_fields(const QuadricTrajectory& traj, const QuadricInvariant& inv) -> SystemInstance {
  const auto t = tabulate_trajectory(traj);
  return lift_profile_to_fields(t.phi, t.N, t.psi, inv.field(), inv.dim(), traj.params.Lambda);
}

/// MP data (phi, N, psi) generated by a lapse profile U(xi): N = 1/U, phi = N^{1/(n-2)}, psi per sign.
inline auto lift_lapse_profile(const std::shared_ptr<const Profile1D>& U, const ScalarField& xi, std::size_t n,
                               int sign = 1) -> SystemInstance {
  return mp_from_inverse_lapse(n, fields::compose(U, xi), sign);
}

}  // namespace electrovac
