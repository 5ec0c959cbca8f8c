// SPDX-License-Identifier: MIT
/**
    \file
    \brief closed-form electrovacuum families of Majumdar-Papapetrou type

    Every family is generated by a positive function U = 1/N that is harmonic
    for the flat metric. From U the remaining data follow:

        N = 1/U,   phi = N^{1/(n-2)},   psi = sign sqrt((n-1)/(2(n-2))) (1 - N),   Lambda = 0.

    Two choices of U are shipped: sums of harmonic kernels r^{2-n} around
    centers, and the arctan profile of a dilation invariant.
*/

#pragma once

#include <electrovac/error.hpp>
#include <electrovac/field.hpp>
#include <electrovac/invariants.hpp>
#include <electrovac/jet.hpp>
#include <electrovac/residuals.hpp>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace electrovac {

/// sqrt((n-1) / (2(n-2))), the slope of psi against 1 - N.
inline auto mp_potential_coefficient(std::size_t n) -> double {
  const double nd = static_cast<double>(n);
  return std::sqrt((nd - 1.0) / (2.0 * (nd - 2.0)));
}

inline void require_sign(int sign) {
  if (sign != 1 && sign != -1) throw Error(ErrorCode::invalid_argument, "sign must be +1 or -1");
}

/// MP data (N, phi, psi) generated by U = 1/N.
inline auto mp_from_inverse_lapse(std::size_t n, const ScalarField& U, int sign) -> SystemInstance {
  if (n < Point::min_dimension) throw Error(ErrorCode::dimension_mismatch, "need n >= 3");
  require_sign(sign);
  const double nd = static_cast<double>(n);
  SystemInstance sys;
  sys.n = n;
  sys.lapse = fields::pow(U, -1.0);
  sys.phi = fields::pow(U, -1.0 / (nd - 2.0));
  sys.potential = (static_cast<double>(sign) * mp_potential_coefficient(n)) * (1.0 - sys.lapse);
  sys.cosmological_constant = 0.0;
  return sys;
}

inline auto minkowski(std::size_t n) -> SystemInstance {
  if (n < Point::min_dimension) throw Error(ErrorCode::dimension_mismatch, "need n >= 3");
  return SystemInstance{n, fields::constant(1.0), fields::constant(1.0), fields::constant(0.0), 0.0};
}

inline auto with_cosmological_constant(SystemInstance sys, double Lambda) -> SystemInstance {
  sys.cosmological_constant = Lambda;
  return sys;
}

/// N -> N + eps x_{axis+1}
inline auto perturb_lapse_additive(SystemInstance sys, double eps, std::size_t axis = 0) -> SystemInstance {
  sys.lapse = sys.lapse + eps * fields::coordinate(axis);
  return sys;
}

/// N -> N (1 + eps x_{axis+1})
inline auto perturb_lapse_multiplicative(SystemInstance sys, double eps, std::size_t axis = 0) -> SystemInstance {
  sys.lapse = sys.lapse * (1.0 + eps * fields::coordinate(axis));
  return sys;
}

// ---------------------------------------------------------------------------------------------
// multi-center family

struct MultiCenterParams {
  std::size_t n = 3;
  std::vector<Point> centers;
  std::vector<double> weights;  ///< lambda_l
  double k = 1.0;
  double k1 = -1.0;
  int sign = 1;
  double center_eps = default_center_eps;
};

/// U = sum_l k lambda_l |x - c_l|^{2-n} - k1
inline auto multicenter_inverse_lapse(const MultiCenterParams& mc) -> PolePotential {
  if (mc.k == 0.0) throw Error(ErrorCode::zero_slope, "k must be nonzero");
  if (mc.n < Point::min_dimension) throw Error(ErrorCode::dimension_mismatch, "need n >= 3");
  for (const auto& c : mc.centers) {
    if (c.dim() != mc.n) throw Error(ErrorCode::dimension_mismatch, "center dimension differs from n");
  }
  std::vector<double> w = mc.weights;
  for (double& x : w) x *= mc.k;
  return PolePotential(mc.centers, std::move(w), -mc.k1, mc.center_eps);
}

inline auto build_multicenter(const MultiCenterParams& mc) -> SystemInstance {
  return mp_from_inverse_lapse(mc.n, multicenter_inverse_lapse(mc).field(), mc.sign);
}

inline auto build_multicenter(std::size_t n, std::vector<Point> centers, std::vector<double> weights, double k,
                              double k1, int sign = 1) -> SystemInstance {
  return build_multicenter(MultiCenterParams{n, std::move(centers), std::move(weights), k, k1, sign});
}

// ---------------------------------------------------------------------------------------------
// dilation family

/// U(xi) = k1 + (2k / sqrt D) arctan((2 eta xi + theta) / sqrt D), so that U' = k / Q(xi).
class ArctanProfile final : public Profile1D {
 public:
  ArctanProfile(QuadraticCoefficients q, double k, double k1) : q_(q), k_(k), k1_(k1) {
    if (k_ == 0.0) throw Error(ErrorCode::zero_slope, "k must be nonzero");
    if (!(q_.discriminant() > 0.0)) throw Error(ErrorCode::degenerate_discriminant, "4 eta delta - theta^2 <= 0");
    root_ = std::sqrt(q_.discriminant());
  }

  auto eval(double xi) const -> Taylor2 override {
    const double Q = q_(xi);
    const double dQ = 2.0 * q_.eta * xi + q_.theta;
    return {k1_ + 2.0 * k_ / root_ * std::atan(dQ / root_), k_ / Q, -k_ * dQ / (Q * Q)};
  }

  auto coefficients() const noexcept -> QuadraticCoefficients { return q_; }
  auto sqrt_discriminant() const noexcept -> double { return root_; }
  auto k() const noexcept -> double { return k_; }
  auto k1() const noexcept -> double { return k1_; }

 private:
  QuadraticCoefficients q_;
  double k_;
  double k1_;
  double root_ = 0.0;
};

struct DilationParams {
  std::size_t n = 3;
  std::vector<double> a;
  std::vector<double> b;
  double k = 1.0;
  double k1 = 0.0;
  int sign = 1;
};

struct LapseBounds {
  double A = 0.0;  ///< k1 - k pi / sqrt D
  double B = 0.0;  ///< k1 + k pi / sqrt D
  auto lower() const noexcept -> double { return std::min(A, B); }
  auto upper() const noexcept -> double { return std::max(A, B); }
};

struct EquivalenceConstants {
  double c1 = 0.0;
  double c2 = 0.0;
};

class DilationMP {
 public:
  explicit DilationMP(DilationParams params)
      : params_(std::move(params)), inv_(params_.n, params_.a, params_.b) {
    if (params_.k == 0.0) throw Error(ErrorCode::zero_slope, "k must be nonzero");
    require_sign(params_.sign);
    profile_ = std::make_shared<ArctanProfile>(inv_.quadratic_coefficients(), params_.k, params_.k1);
  }

  DilationMP(const DilationInvariant& inv, double k, double k1, int sign = 1)
      : DilationMP(DilationParams{inv.dim(), inv.a(), inv.b(), k, k1, sign}) {}

  auto params() const noexcept -> const DilationParams& { return params_; }
  auto invariant() const noexcept -> const DilationInvariant& { return inv_; }
  auto profile() const noexcept -> const std::shared_ptr<const ArctanProfile>& { return profile_; }

  /// U(xi(x)) through the invariant.
  auto inverse_lapse() const -> ScalarField { return fields::compose(profile_, inv_.field()); }

  /// k1 + (2k/sqrt D) arctan((theta P + 2 eta M) / (sqrt D P)), assembled from the linear forms.
  auto inverse_lapse_linear_form() const -> ScalarField {
    const auto q = inv_.quadratic_coefficients();
    const double root = profile_->sqrt_discriminant();
    const auto M = fields::linear(inv_.a());
    const auto P = fields::linear(inv_.b());
    const auto arg = fields::quotient(q.theta * P + 2.0 * q.eta * M, root * P, root * inv_.singular_eps());
    return (2.0 * params_.k / root) * fields::atan(arg) + params_.k1;
  }

  auto system() const -> SystemInstance { return mp_from_inverse_lapse(params_.n, inverse_lapse(), params_.sign); }

  auto bounds() const -> LapseBounds {
    const double w = params_.k * std::numbers::pi / profile_->sqrt_discriminant();
    return {params_.k1 - w, params_.k1 + w};
  }

  /// c1 g <= gbar <= c2 g wherever P != 0; gbar_11 / g_11 = phi^{-2} = U^{2/(n-2)}.
  auto uniform_equivalence() const -> EquivalenceConstants {
    const auto ab = bounds();
    if (!(ab.lower() > 0.0)) {
      throw Error(ErrorCode::non_positive_lower_bound,
                  "lower bound of 1/N is " + std::to_string(ab.lower()) + "; equivalence not certified");
    }
    const double e = 2.0 / (static_cast<double>(params_.n) - 2.0);
    return {std::pow(ab.lower(), e), std::pow(ab.upper(), e)};
  }

 private:
  DilationParams params_;
  DilationInvariant inv_;
  std::shared_ptr<const ArctanProfile> profile_;
};

inline auto build_dilation(const DilationInvariant& inv, double k, double k1, int sign = 1) -> SystemInstance {
  return DilationMP(inv, k, k1, sign).system();
}

inline auto lapse_bounds(const DilationMP& sol) -> LapseBounds { return sol.bounds(); }
inline auto uniform_equivalence(const DilationMP& sol) -> EquivalenceConstants { return sol.uniform_equivalence(); }

// ---------------------------------------------------------------------------------------------
// MP structural identities

struct MPIdentityResiduals {
  double phi = 0.0;        ///< max_k |(n-2) phi_k / phi - N_k / N|
  double psi = 0.0;        ///< ||grad psi|^2 - (n-1)/(2(n-2)) |grad N|^2|
  double phi_scale = 0.0;  ///< max_k |N_k / N|
  double psi_scale = 0.0;  ///< |grad psi|^2
  auto phi_relative() const noexcept -> double { return phi / (1.0 + phi_scale); }
  auto psi_relative() const noexcept -> double { return psi / (1.0 + psi_scale); }
};

inline auto mp_identity_residuals(const SystemInstance& sys, const Point& p) -> MPIdentityResiduals {
  const auto j = evaluate_system(sys, p);
  const double nd = static_cast<double>(sys.n);
  const double c2 = (nd - 1.0) / (2.0 * (nd - 2.0));
  MPIdentityResiduals r;
  double gpsi = 0.0, gN = 0.0;
  for (std::size_t k = 0; k < sys.n; ++k) {
    const double lnN = j.lapse.grad(k) / j.lapse.value();
    r.phi = std::max(r.phi, std::abs((nd - 2.0) * j.phi.grad(k) / j.phi.value() - lnN));
    r.phi_scale = std::max(r.phi_scale, std::abs(lnN));
    gpsi += j.potential.grad(k) * j.potential.grad(k);
    gN += j.lapse.grad(k) * j.lapse.grad(k);
  }
  r.psi = std::abs(gpsi - c2 * gN);
  r.psi_scale = gpsi;
  return r;
}

// ---------------------------------------------------------------------------------------------
// descriptors

struct MinkowskiParams {
  std::size_t n = 3;
};

using SolutionParams = std::variant<MinkowskiParams, MultiCenterParams, DilationParams>;

/// A solution family plus the modifications used by negative tests and sensitivity runs.
struct SolutionSpec {
  SolutionParams family = MinkowskiParams{};
  double cosmological_constant = 0.0;     ///< overrides the family's Lambda = 0
  double lapse_perturbation = 0.0;        ///< N -> N (1 + eps x_1)
};

inline auto solution_dim(const SolutionParams& s) -> std::size_t {
  return std::visit([](const auto& f) { return f.n; }, s);
}

inline auto family_name(const SolutionParams& s) -> std::string {
  struct {
    auto operator()(const MinkowskiParams&) const -> std::string { return "minkowski"; }
    auto operator()(const MultiCenterParams&) const -> std::string { return "multicenter"; }
    auto operator()(const DilationParams&) const -> std::string { return "dilation"; }
  } v;
  return std::visit(v, s);
}

inline auto build_solution(const SolutionSpec& spec) -> SystemInstance {
  struct {
    auto operator()(const MinkowskiParams& m) const -> SystemInstance { return minkowski(m.n); }
    auto operator()(const MultiCenterParams& m) const -> SystemInstance { return build_multicenter(m); }
    auto operator()(const DilationParams& d) const -> SystemInstance { return DilationMP(d).system(); }
  } v;
  auto sys = std::visit(v, spec.family);
  sys.cosmological_constant = spec.cosmological_constant;
  if (spec.lapse_perturbation != 0.0) sys = perturb_lapse_multiplicative(std::move(sys), spec.lapse_perturbation);
  return sys;
}

}  // namespace electrovac
