// SPDX-License-Identifier: MIT
/**
    \file
    \brief invariants xi(x) along which the electrostatic system reduces to ODEs

    Three families are provided, each with closed-form jets:

      - quadric:       xi = Gamma(sum_k tau x_k^2 + gamma_k x_k + theta_k)
      - dilation:      xi = M(x) / P(x), M = sum_{i<=m1} a_i x_i, P = sum_{j<=m2} b_j x_j
      - harmonic pole: xi = -sum_l lambda_l |x - c_l|^{2-n}

    For every family the ratio Delta xi / |grad xi|^2 is a function of xi alone
    (see level_ratio), which is what makes the reduction possible.
*/

#pragma once

#include <electrovac/error.hpp>
#include <electrovac/field.hpp>
#include <electrovac/jet.hpp>
#include <electrovac/random.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace electrovac {

namespace detail {

template <class Inv>
class InvariantNode final : public FieldNode {
 public:
  explicit InvariantNode(Inv inv) : inv_(std::move(inv)) {}
  auto eval(const Point& p) const -> Jet2 override { return inv_.xi_jet(p); }

 private:
  Inv inv_;
};

inline void require_dim(const Point& p, std::size_t n) {
  if (p.dim() != n) {
    throw Error(ErrorCode::dimension_mismatch,
                "expected a point of dimension " + std::to_string(n) + ", got " + std::to_string(p.dim()));
  }
}

}  // namespace detail

class QuadricInvariant {
 public:
  QuadricInvariant(double tau, std::vector<double> gamma, std::vector<double> theta,
                   std::shared_ptr<const Profile1D> outer = nullptr)
      : tau_(tau), gamma_(std::move(gamma)), theta_(std::move(theta)), outer_(std::move(outer)) {
    if (gamma_.size() != theta_.size()) {
      throw Error(ErrorCode::dimension_mismatch, "gamma and theta must both have n entries");
    }
    if (gamma_.size() < Point::min_dimension) throw Error(ErrorCode::dimension_mismatch, "quadric needs n >= 3");
    const bool all_zero =
        tau_ == 0.0 && std::all_of(gamma_.begin(), gamma_.end(), [](double g) { return g == 0.0; });
    if (all_zero) throw Error(ErrorCode::invalid_argument, "tau and gamma all zero make xi constant");
    beta_ = 0.0;
    for (std::size_t k = 0; k < gamma_.size(); ++k) beta_ += gamma_[k] * gamma_[k] - 4.0 * tau_ * theta_[k];
  }

  auto dim() const noexcept -> std::size_t { return gamma_.size(); }
  auto tau() const noexcept -> double { return tau_; }
  auto gamma() const noexcept -> const std::vector<double>& { return gamma_; }
  auto theta() const noexcept -> const std::vector<double>& { return theta_; }
  /// beta = sum_k (gamma_k^2 - 4 tau theta_k), so that |grad xi|^2 = 4 tau xi + beta when Gamma = id.
  auto beta() const noexcept -> double { return beta_; }
  auto identity_outer() const noexcept -> bool { return outer_ == nullptr; }

  auto xi_jet(const Point& p) const -> Jet2 {
    detail::require_dim(p, dim());
    const auto n = dim();
    Jet2 s(n);
    double v = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      v += tau_ * p[k] * p[k] + gamma_[k] * p[k] + theta_[k];
      s.set_grad(k, 2.0 * tau_ * p[k] + gamma_[k]);
      s.set_hess(k, k, 2.0 * tau_);
    }
    s.set_value(v);
    if (!outer_) return s;
    return compose(outer_->eval(v), s);
  }

  /// Delta xi / |grad xi|^2 = 2 n tau / (4 tau xi + beta); only for Gamma = id.
  auto level_ratio(double xi) const -> std::optional<double> {
    if (outer_) return std::nullopt;
    return 2.0 * static_cast<double>(dim()) * tau_ / (4.0 * tau_ * xi + beta_);
  }

  auto field() const -> ScalarField {
    return ScalarField(std::make_shared<detail::InvariantNode<QuadricInvariant>>(*this));
  }

  /// Same xi assembled from generic arithmetic nodes (cross-check path).
  auto composite_field() const -> ScalarField {
    ScalarField s = fields::constant(0.0);
    for (std::size_t k = 0; k < dim(); ++k) {
      auto x = fields::coordinate(k);
      s = s + (tau_ * (x * x) + gamma_[k] * x + theta_[k]);
    }
    if (outer_) return fields::compose(outer_, s);
    return s;
  }

 private:
  double tau_;
  std::vector<double> gamma_;
  std::vector<double> theta_;
  std::shared_ptr<const Profile1D> outer_;
  double beta_ = 0.0;
};

/// Coefficients of P^2 |grad xi|^2 = eta xi^2 + theta xi + delta.
struct QuadraticCoefficients {
  double eta = 0.0;
  double theta = 0.0;
  double delta = 0.0;

  auto discriminant() const noexcept -> double { return 4.0 * eta * delta - theta * theta; }
  auto operator()(double xi) const noexcept -> double { return (eta * xi + theta) * xi + delta; }
};

class DilationInvariant {
 public:
  DilationInvariant(std::size_t n, std::vector<double> a, std::vector<double> b,
                    double singular_eps = default_singular_eps)
      : n_(n), a_(std::move(a)), b_(std::move(b)), eps_(singular_eps) {
    const auto m1 = a_.size();
    const auto m2 = b_.size();
    if (n_ < Point::min_dimension) throw Error(ErrorCode::dimension_mismatch, "dilation invariant needs n >= 3");
    if (!(1 <= m1 && m1 <= m2 && m2 <= n_)) {
      throw Error(ErrorCode::invalid_argument, "need 1 <= m1 <= m2 <= n");
    }
    double sum_a = 0.0;
    for (double ai : a_) sum_a += ai;
    if (sum_a == 0.0) throw Error(ErrorCode::invalid_argument, "sum of a_i must be nonzero");
    for (double bj : b_) {
      if (bj == 0.0) throw Error(ErrorCode::invalid_argument, "every b_j must be nonzero");
    }
    for (double bj : b_) q_.eta += bj * bj;
    for (std::size_t k = 0; k < m1; ++k) {
      q_.theta -= 2.0 * a_[k] * b_[k];
      q_.delta += a_[k] * a_[k];
    }
    // Cauchy-Schwarz gives D >= 0; D == 0 only for proportional a, b, where xi is constant.
    if (!(q_.discriminant() > 0.0)) {
      throw Error(ErrorCode::degenerate_discriminant, "4 eta delta - theta^2 must be positive");
    }
  }

  auto dim() const noexcept -> std::size_t { return n_; }
  auto m1() const noexcept -> std::size_t { return a_.size(); }
  auto m2() const noexcept -> std::size_t { return b_.size(); }
  auto a() const noexcept -> const std::vector<double>& { return a_; }
  auto b() const noexcept -> const std::vector<double>& { return b_; }
  auto singular_eps() const noexcept -> double { return eps_; }

  auto quadratic_coefficients() const noexcept -> QuadraticCoefficients { return q_; }
  auto discriminant() const noexcept -> double { return q_.discriminant(); }

  auto numerator(const Point& p) const -> double {
    double m = 0.0;
    for (std::size_t i = 0; i < a_.size(); ++i) m += a_[i] * p[i];
    return m;
  }
  auto denominator(const Point& p) const -> double {
    double s = 0.0;
    for (std::size_t j = 0; j < b_.size(); ++j) s += b_[j] * p[j];
    return s;
  }

  /// xi_{,k} = (M_{,k} - P_{,k} xi) / P and xi_{,jk} = -(P_{,j} xi_{,k} + P_{,k} xi_{,j}) / P.
  auto xi_jet(const Point& p) const -> Jet2 {
    detail::require_dim(p, n_);
    const double P = denominator(p);
    if (std::abs(P) <= eps_) throw Error(ErrorCode::singular_point, "dilation invariant on P(x) = 0");
    const double xi = numerator(p) / P;
    Jet2 j(n_, xi);
    for (std::size_t k = 0; k < n_; ++k) j.set_grad(k, (a_at(k) - b_at(k) * xi) / P);
    for (std::size_t r = 0; r < n_; ++r) {
      for (std::size_t c = r; c < n_; ++c) {
        j.set_hess(r, c, -(b_at(r) * j.grad(c) + b_at(c) * j.grad(r)) / P);
      }
    }
    return j;
  }

  /// Delta xi / |grad xi|^2 = (2 eta xi + theta) / (eta xi^2 + theta xi + delta).
  auto level_ratio(double xi) const -> std::optional<double> { return (2.0 * q_.eta * xi + q_.theta) / q_(xi); }

  auto field() const -> ScalarField {
    return ScalarField(std::make_shared<detail::InvariantNode<DilationInvariant>>(*this));
  }

  auto composite_field() const -> ScalarField {
    return fields::quotient(fields::linear(a_), fields::linear(b_), eps_);
  }

 private:
  auto a_at(std::size_t k) const -> double { return k < a_.size() ? a_[k] : 0.0; }
  auto b_at(std::size_t k) const -> double { return k < b_.size() ? b_[k] : 0.0; }

  std::size_t n_;
  std::vector<double> a_;
  std::vector<double> b_;
  double eps_;
  QuadraticCoefficients q_{};
};

/// sum_l w_l |x - c_l|^{2-n} + offset: a combination of harmonic kernels.
class PolePotential {
 public:
  PolePotential(std::vector<Point> centers, std::vector<double> weights, double offset, double center_eps)
      : centers_(std::move(centers)), weights_(std::move(weights)), offset_(offset), eps_(center_eps) {
    if (centers_.empty()) throw Error(ErrorCode::invalid_argument, "need at least one center");
    if (centers_.size() != weights_.size()) {
      throw Error(ErrorCode::invalid_argument, "one weight per center required");
    }
    const auto n = centers_.front().dim();
    for (const auto& c : centers_) {
      if (c.dim() != n) throw Error(ErrorCode::dimension_mismatch, "centers of mixed dimension");
    }
    for (std::size_t i = 0; i < centers_.size(); ++i) {
      for (std::size_t j = i + 1; j < centers_.size(); ++j) {
        if (centers_[i] == centers_[j]) throw Error(ErrorCode::coincident_centers, "centers must be distinct");
      }
    }
  }

  auto dim() const noexcept -> std::size_t { return centers_.front().dim(); }
  auto centers() const noexcept -> const std::vector<Point>& { return centers_; }
  auto weights() const noexcept -> const std::vector<double>& { return weights_; }
  auto center_eps() const noexcept -> double { return eps_; }

  auto min_center_distance(const Point& p) const -> double {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& c : centers_) {
      double r2 = 0.0;
      for (std::size_t k = 0; k < p.dim(); ++k) r2 += (p[k] - c[k]) * (p[k] - c[k]);
      best = std::min(best, std::sqrt(r2));
    }
    return best;
  }

  auto eval(const Point& p) const -> Jet2 {
    const auto n = dim();
    detail::require_dim(p, n);
    const double nd = static_cast<double>(n);
    Jet2 j(n, offset_);
    std::vector<double> d(n);
    for (std::size_t l = 0; l < centers_.size(); ++l) {
      double r2 = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        d[k] = p[k] - centers_[l][k];
        r2 += d[k] * d[k];
      }
      const double r = std::sqrt(r2);
      if (r <= eps_) throw Error(ErrorCode::singular_point, "point within the exclusion radius of a center");
      const double w = weights_[l];
      const double kernel = std::pow(r, 2.0 - nd);
      // d_i r^{2-n} = (2-n) r^{-n} d_i,  d_ij r^{2-n} = (2-n) r^{-n} (delta_ij - n d_i d_j / r^2)
      const double c1 = w * (2.0 - nd) * kernel / r2;
      j.set_value(j.value() + w * kernel);
      for (std::size_t a = 0; a < n; ++a) {
        j.set_grad(a, j.grad(a) + c1 * d[a]);
        for (std::size_t b = a; b < n; ++b) {
          const double delta = a == b ? 1.0 : 0.0;
          j.set_hess(a, b, j.hess(a, b) + c1 * (delta - nd * d[a] * d[b] / r2));
        }
      }
    }
    return j;
  }

  auto field() const -> ScalarField;

 private:
  std::vector<Point> centers_;
  std::vector<double> weights_;
  double offset_;
  double eps_;
};

namespace detail {

class PoleNode final : public FieldNode {
 public:
  explicit PoleNode(PolePotential pot) : pot_(std::move(pot)) {}
  auto eval(const Point& p) const -> Jet2 override { return pot_.eval(p); }

 private:
  PolePotential pot_;
};

}  // namespace detail

inline auto PolePotential::field() const -> ScalarField {
  return ScalarField(std::make_shared<detail::PoleNode>(*this));
}

inline constexpr double default_center_eps = 1e-6;

class HarmonicPoleInvariant {
 public:
  HarmonicPoleInvariant(std::vector<Point> centers, std::vector<double> weights,
                        double center_eps = default_center_eps)
      : potential_(centers, negated(weights), 0.0, center_eps),
        centers_(std::move(centers)),
        weights_(std::move(weights)) {
    if (std::all_of(weights_.begin(), weights_.end(), [](double w) { return w == 0.0; })) {
      throw Error(ErrorCode::invalid_argument, "at least one pole weight must be nonzero");
    }
    if (dim() < Point::min_dimension) throw Error(ErrorCode::dimension_mismatch, "poles need n >= 3");
  }

  auto dim() const noexcept -> std::size_t { return potential_.dim(); }
  auto centers() const noexcept -> const std::vector<Point>& { return centers_; }
  auto weights() const noexcept -> const std::vector<double>& { return weights_; }
  auto center_eps() const noexcept -> double { return potential_.center_eps(); }

  auto xi_jet(const Point& p) const -> Jet2 { return potential_.eval(p); }

  /// xi is harmonic, so the ratio vanishes identically.
  auto level_ratio(double) const -> std::optional<double> { return 0.0; }

  auto field() const -> ScalarField {
    return ScalarField(std::make_shared<detail::InvariantNode<HarmonicPoleInvariant>>(*this));
  }

  auto composite_field() const -> ScalarField {
    const auto n = dim();
    ScalarField xi = fields::constant(0.0);
    for (std::size_t l = 0; l < centers_.size(); ++l) {
      ScalarField r2 = fields::constant(0.0);
      for (std::size_t k = 0; k < n; ++k) {
        auto d = fields::coordinate(k) - centers_[l][k];
        r2 = r2 + d * d;
      }
      xi = xi - weights_[l] * fields::pow(r2, (2.0 - static_cast<double>(n)) / 2.0);
    }
    return xi;
  }

 private:
  static auto negated(std::vector<double> w) -> std::vector<double> {
    for (double& x : w) x = -x;
    return w;
  }

  PolePotential potential_;
  std::vector<Point> centers_;
  std::vector<double> weights_;
};

using AnyInvariant = std::variant<QuadricInvariant, DilationInvariant, HarmonicPoleInvariant>;

inline auto xi_jet(const AnyInvariant& inv, const Point& p) -> Jet2 {
  return std::visit([&](const auto& i) { return i.xi_jet(p); }, inv);
}
inline auto invariant_field(const AnyInvariant& inv) -> ScalarField {
  return std::visit([](const auto& i) { return i.field(); }, inv);
}
inline auto invariant_dim(const AnyInvariant& inv) -> std::size_t {
  return std::visit([](const auto& i) { return i.dim(); }, inv);
}
/// Closed-form Delta xi / |grad xi|^2 as a function of xi, when known.
inline auto level_ratio(const AnyInvariant& inv, double xi) -> std::optional<double> {
  return std::visit([&](const auto& i) { return i.level_ratio(xi); }, inv);
}

inline auto quadratic_coefficients(const DilationInvariant& inv) -> QuadraticCoefficients {
  return inv.quadratic_coefficients();
}

/// |(2 eta xi + theta) / P^2 - Delta xi| at p: the derivative of P^2 |grad xi|^2 in xi over P^2
/// reproduces the Laplacian of a dilation invariant.
inline auto fundamental_relation_residual(const DilationInvariant& inv, const Point& p) -> double {
  const auto jet = inv.xi_jet(p);
  const auto q = inv.quadratic_coefficients();
  const double P = inv.denominator(p);
  return std::abs((2.0 * q.eta * jet.value() + q.theta) / (P * P) - jet.laplacian());
}

// ---------------------------------------------------------------------------------------------
// separability diagnostics

struct SeparabilityOptions {
  /// Axis-aligned sampling box; rays start at uniform points in it and are clipped to it.
  std::vector<double> box_min;
  std::vector<double> box_max;
  double tol_sep = 1e-8;
  double eps_grad = 1e-10;
  double root_tol = 1e-10;
  std::size_t ray_steps = 64;
  std::size_t max_attempts_per_sample = 50;
};

struct LevelSpread {
  double level = 0.0;
  std::size_t samples = 0;
  std::size_t degenerate = 0;
  double ratio_min = 0.0;  ///< min of Delta xi / |grad xi|^2 on the level
  double ratio_max = 0.0;
  double ratio_spread = 0.0;
  /// max over pairs i != j of the spread of xi_{,ij} / (xi_{,i} xi_{,j}); NaN when no pair qualifies.
  double hessian_ratio_spread = std::numeric_limits<double>::quiet_NaN();
  bool separable = false;
};

struct SeparabilityReport {
  std::vector<LevelSpread> levels;
  bool separable = false;
};

namespace detail {

/// One sample on {xi = level}: bracket along a random chord of the box, then bisect.
inline auto find_on_level(const ScalarField& xi, double level, const SeparabilityOptions& opt, CounterRng& rng)
    -> std::optional<Point> {
  const auto n = opt.box_min.size();
  std::vector<double> origin(n), dir(n);
  for (std::size_t k = 0; k < n; ++k) origin[k] = rng.uniform(opt.box_min[k], opt.box_max[k]);
  double norm = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    dir[k] = rng.normal();
    norm += dir[k] * dir[k];
  }
  norm = std::sqrt(norm);
  if (norm == 0.0) return std::nullopt;
  for (double& d : dir) d /= norm;

  // chord [t_lo, t_hi] of the box along origin + t dir
  double t_lo = -std::numeric_limits<double>::infinity();
  double t_hi = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n; ++k) {
    if (dir[k] == 0.0) continue;
    double t1 = (opt.box_min[k] - origin[k]) / dir[k];
    double t2 = (opt.box_max[k] - origin[k]) / dir[k];
    if (t1 > t2) std::swap(t1, t2);
    t_lo = std::max(t_lo, t1);
    t_hi = std::min(t_hi, t2);
  }
  if (!(t_lo < t_hi)) return std::nullopt;

  auto at = [&](double t) {
    std::vector<double> c(n);
    for (std::size_t k = 0; k < n; ++k) c[k] = origin[k] + t * dir[k];
    return Point(std::move(c));
  };
  auto g = [&](double t) -> std::optional<double> {
    try {
      return xi.value(at(t)) - level;
    } catch (const Error& e) {
      if (e.code() == ErrorCode::singular_point || e.code() == ErrorCode::non_finite_result) return std::nullopt;
      throw;
    }
  };

  // brackets are bisected to collapse; root_tol only screens out sign changes across poles
  const double tol = opt.root_tol * (1.0 + std::abs(level));
  bool have_prev = false;
  double prev_t = 0.0, prev_g = 0.0;
  for (std::size_t s = 0; s <= opt.ray_steps; ++s) {
    const double t = t_lo + (t_hi - t_lo) * static_cast<double>(s) / static_cast<double>(opt.ray_steps);
    const auto gv = g(t);
    if (!gv) {
      have_prev = false;
      continue;
    }
    if (*gv == 0.0) return at(t);
    if (have_prev && ((prev_g < 0.0) != (*gv < 0.0))) {
      double a = prev_t, b = t, ga = prev_g, best_t = t, best_g = std::abs(*gv);
      if (std::abs(ga) < best_g) {
        best_t = a;
        best_g = std::abs(ga);
      }
      for (int it = 0; it < 200; ++it) {
        const double m = 0.5 * (a + b);
        if (m <= a || m >= b) break;
        const auto gm = g(m);
        if (!gm) break;
        if (std::abs(*gm) < best_g) {
          best_t = m;
          best_g = std::abs(*gm);
        }
        if (*gm == 0.0) break;
        if ((ga < 0.0) == (*gm < 0.0)) {
          a = m;
          ga = *gm;
        } else {
          b = m;
        }
      }
      if (best_g <= tol) return at(best_t);
    }
    have_prev = true;
    prev_t = t;
    prev_g = *gv;
  }
  return std::nullopt;
}

}  // namespace detail

/// Samples each level set of xi and measures how much Delta xi / |grad xi|^2 varies on it.
/// The verdict uses that ratio (the right-hand side of the lapse ODE); the spread of
/// xi_{,ij} / (xi_{,i} xi_{,j}) is reported alongside as a quadric-ansatz diagnostic.
inline auto separability_check(const ScalarField& xi, const std::vector<double>& levels,
                               std::size_t samples_per_level, std::uint64_t seed,
                               const SeparabilityOptions& opt) -> SeparabilityReport {
  const auto n = opt.box_min.size();
  if (n < Point::min_dimension || opt.box_max.size() != n) {
    throw Error(ErrorCode::dimension_mismatch, "separability box must have n >= 3 matching bounds");
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (!(opt.box_min[k] < opt.box_max[k])) throw Error(ErrorCode::invalid_argument, "empty separability box");
  }
  if (samples_per_level == 0) throw Error(ErrorCode::invalid_argument, "need at least one sample per level");

  SeparabilityReport report;
  report.separable = true;
  for (std::size_t li = 0; li < levels.size(); ++li) {
    const double level = levels[li];
    CounterRng rng(seed, li);
    LevelSpread ls;
    ls.level = level;
    ls.ratio_min = std::numeric_limits<double>::infinity();
    ls.ratio_max = -std::numeric_limits<double>::infinity();
    std::vector<double> pair_min(n * n, std::numeric_limits<double>::infinity());
    std::vector<double> pair_max(n * n, -std::numeric_limits<double>::infinity());
    double scale = 0.0;

    const std::size_t max_attempts = samples_per_level * opt.max_attempts_per_sample;
    for (std::size_t attempt = 0; attempt < max_attempts && ls.samples < samples_per_level; ++attempt) {
      const auto p = detail::find_on_level(xi, level, opt, rng);
      if (!p) continue;
      Jet2 j;
      try {
        j = xi.eval(*p);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::singular_point) continue;
        throw;
      }
      const double g2 = j.grad_norm2();
      if (std::sqrt(g2) <= opt.eps_grad) {
        ++ls.degenerate;
        continue;
      }
      const double ratio = j.laplacian() / g2;
      ls.ratio_min = std::min(ls.ratio_min, ratio);
      ls.ratio_max = std::max(ls.ratio_max, ratio);
      scale = std::max(scale, std::abs(ratio));
      for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
          const double gg = j.grad(a) * j.grad(b);
          if (std::abs(gg) <= 1e-8 * g2) continue;
          const double h = j.hess(a, b) / gg;
          pair_min[a * n + b] = std::min(pair_min[a * n + b], h);
          pair_max[a * n + b] = std::max(pair_max[a * n + b], h);
        }
      }
      ++ls.samples;
    }
    if (ls.samples == 0) {
      if (ls.degenerate > 0) {
        throw Error(ErrorCode::degenerate_gradient,
                    "gradient of xi vanishes on level " + std::to_string(level));
      }
      throw Error(ErrorCode::empty_level_set, "no sample found on level " + std::to_string(level));
    }
    ls.ratio_spread = ls.ratio_max - ls.ratio_min;
    for (std::size_t k = 0; k < n * n; ++k) {
      if (pair_max[k] < pair_min[k]) continue;
      const double spread = pair_max[k] - pair_min[k];
      ls.hessian_ratio_spread = std::isnan(ls.hessian_ratio_spread) ? spread : std::max(ls.hessian_ratio_spread, spread);
    }
    ls.separable = ls.ratio_spread <= opt.tol_sep * (1.0 + scale);
    report.separable = report.separable && ls.separable;
    report.levels.push_back(ls);
  }
  return report;
}

}  // namespace electrovac
