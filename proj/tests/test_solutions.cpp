// SPDX-License-Identifier: MIT

#include <electrovac/finite_difference.hpp>
#include <electrovac/solutions.hpp>

#include <gtest/gtest.h>

#include <numbers>

#include "support.hpp"

using namespace electrovac;

namespace {

void expect_code(ErrorCode code, const std::function<void()>& f) {
  try {
    f();
    ADD_FAILURE() << "expected " << to_string(code);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), code) << e.what();
  }
}

auto in_domain(const SystemInstance& sys) {
  return [&sys](const Point& p) {
    try {
      (void)evaluate_system(sys, p);
      return true;
    } catch (const Error&) {
      return false;
    }
  };
}

auto max_normalized(const ResidualVector& r) -> double {
  double m = 0.0;
  for (auto c : all_channels) m = std::max(m, r[c].normalized);
  return m;
}

}  // namespace

TEST(MultiCenter, SingleCenterWorkedValues) {
  const auto sys = build_multicenter(3, {Point({0.0, 0.0, 0.0})}, {1.0}, 1.0, -1.0);
  const Point p({1.0, 0.0, 0.0});
  EXPECT_DOUBLE_EQ(sys.lapse.value(p), 0.5);
  EXPECT_DOUBLE_EQ(sys.phi.value(p), 0.5);
  EXPECT_DOUBLE_EQ(sys.potential.value(p), 0.5);
  EXPECT_EQ(mp_potential_coefficient(3), 1.0);
  const auto neg = build_multicenter(3, {Point({0.0, 0.0, 0.0})}, {1.0}, 1.0, -1.0, -1);
  EXPECT_DOUBLE_EQ(neg.potential.value(p), -0.5);
}

TEST(MultiCenter, ZeroWeightsGiveMinkowski) {
  const auto sys = build_multicenter(4, {Point({0.0, 0.0, 0.0, 0.0}), Point({1.0, 0.0, 0.0, 0.0})}, {0.0, 0.0},
                                     1.0, -1.0);
  const Point p({0.3, 0.2, -0.1, 0.5});
  EXPECT_EQ(sys.lapse.value(p), 1.0);
  EXPECT_EQ(sys.phi.value(p), 1.0);
  EXPECT_EQ(sys.potential.value(p), 0.0);
  const auto r = evaluate_residuals(sys, p);
  for (auto c : all_channels) EXPECT_EQ(r[c].absolute, 0.0);
}

TEST(MultiCenter, InverseLapseIsHarmonic) {
  CounterRng rng(4);
  for (std::size_t n : {3u, 4u, 5u}) {
    MultiCenterParams mc;
    mc.n = n;
    for (int l = 0; l < 3; ++l) {
      mc.centers.push_back(evtest::random_point(rng, n, -1.0, 1.0));
      mc.weights.push_back(rng.uniform(0.2, 2.0));
    }
    mc.k = rng.uniform(0.5, 2.0);
    mc.k1 = -rng.uniform(0.5, 2.0);
    const auto U = multicenter_inverse_lapse(mc).field();
    for (int t = 0; t < 100; ++t) {
      const auto p = evtest::random_point_where(
          rng, n, -2.0, 2.0, [&](const Point& q) { return evtest::min_distance(q, mc.centers) > 0.1; });
      const auto j = U.eval(p);
      double scale = 1.0;
      for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::abs(j.hess(i, i)));
      EXPECT_LE(std::abs(j.laplacian()), 1e-12 * scale);
    }
  }
}

TEST(MultiCenter, Errors) {
  expect_code(ErrorCode::zero_slope, [] { build_multicenter(3, {Point({0.0, 0.0, 0.0})}, {1.0}, 0.0, -1.0); });
  expect_code(ErrorCode::coincident_centers, [] {
    build_multicenter(3, {Point({1.0, 0.0, 0.0}), Point({1.0, 0.0, 0.0})}, {1.0, 1.0}, 1.0, -1.0);
  });
  expect_code(ErrorCode::dimension_mismatch, [] { build_multicenter(4, {Point({1.0, 0.0, 0.0})}, {1.0}, 1.0, -1.0); });
}

TEST(Dilation, WorkedValuesAndBounds) {
  const DilationInvariant inv(3, {1.0}, {1.0, 1.0});
  const DilationMP sol(inv, 1.0, 0.0);
  EXPECT_NEAR(sol.inverse_lapse().value(Point({1.0, 0.0, 0.0})), std::numbers::pi / 4.0, 1e-15);
  const auto ab = lapse_bounds(sol);
  EXPECT_DOUBLE_EQ(ab.A, -std::numbers::pi / 2.0);
  EXPECT_DOUBLE_EQ(ab.B, std::numbers::pi / 2.0);
  expect_code(ErrorCode::non_positive_lower_bound, [&] { uniform_equivalence(sol); });

  const DilationMP pos(inv, 1.0, 2.0);
  const auto ab2 = lapse_bounds(pos);
  EXPECT_DOUBLE_EQ(ab2.A, 2.0 - std::numbers::pi / 2.0);
  EXPECT_DOUBLE_EQ(ab2.B, 2.0 + std::numbers::pi / 2.0);
  const auto c = uniform_equivalence(pos);
  EXPECT_DOUBLE_EQ(c.c1, std::pow(ab2.A, 2.0));
  EXPECT_DOUBLE_EQ(c.c2, std::pow(ab2.B, 2.0));
}

TEST(Dilation, SampledBoundsAndMetricRatio) {
  // the exponent of c1, c2 is fixed by sampling gbar_11 / g_11 = phi^{-2}
  for (const auto& [n, a, b] : {std::tuple{3u, std::vector<double>{1.0}, std::vector<double>{1.0, 1.0}},
                                std::tuple{4u, std::vector<double>{1.0, 1.0}, std::vector<double>{1.0, -1.0, 2.0}},
                                std::tuple{5u, std::vector<double>{2.0, -1.0}, std::vector<double>{1.0, 1.0, 1.0, 3.0}}}) {
    const DilationInvariant inv(n, a, b);
    const DilationMP sol(inv, 0.8, 3.0);
    const auto ab = sol.bounds();
    const auto c = sol.uniform_equivalence();
    const auto sys = sol.system();
    CounterRng rng(n);
    for (int t = 0; t < 500; ++t) {
      const auto p = evtest::random_point_where(rng, n, -3.0, 3.0, in_domain(sys));
      const double U = sol.inverse_lapse().value(p);
      EXPECT_GT(U, ab.lower());
      EXPECT_LT(U, ab.upper());
      const double phi = sys.phi.value(p);
      const double ratio = 1.0 / (phi * phi);
      EXPECT_GE(ratio, c.c1);
      EXPECT_LE(ratio, c.c2);
    }
  }
}

TEST(Dilation, TwoArctanFormsAgree) {
  const DilationInvariant inv(4, {1.0, 1.0}, {1.0, -1.0, 2.0});
  const DilationMP sol(inv, 1.0, 2.0);
  const auto u1 = sol.inverse_lapse();
  const auto u2 = sol.inverse_lapse_linear_form();
  CounterRng rng(77);
  for (int t = 0; t < 500; ++t) {
    const auto p = evtest::random_point_where(rng, 4, -2.0, 2.0,
                                              [&](const Point& q) { return std::abs(inv.denominator(q)) > 1e-3; });
    EXPECT_LE(std::abs(u1.value(p) - u2.value(p)), 1e-12);
  }
}

TEST(Dilation, LapseIsDilationInvariant) {
  const DilationMP sol(DilationInvariant(4, {1.0, 1.0}, {1.0, -1.0, 2.0}), 1.0, 2.0);
  const auto sys = sol.system();
  CounterRng rng(19);
  for (int t = 0; t < 200; ++t) {
    const auto p = evtest::random_point_where(rng, 4, -2.0, 2.0, in_domain(sys));
    const double N = sys.lapse.value(p);
    for (double s : {0.5, 2.0, 10.0}) EXPECT_LE(std::abs(sys.lapse.value(p.scaled(s)) - N) / N, 1e-12);
  }
}

TEST(Dilation, InverseLapseIsHarmonic) {
  const DilationMP sol(DilationInvariant(5, {1.0, 2.0}, {1.0, -1.0, 0.5, 2.0}), -1.5, 0.3);
  const auto U = sol.inverse_lapse();
  CounterRng rng(29);
  for (int t = 0; t < 300; ++t) {
    const auto p = evtest::random_point_where(
        rng, 5, -2.0, 2.0, [&](const Point& q) { return std::abs(sol.invariant().denominator(q)) > 0.05; });
    const auto j = U.eval(p);
    double scale = 1.0;
    for (std::size_t i = 0; i < 5; ++i) scale = std::max(scale, std::abs(j.hess(i, i)));
    EXPECT_LE(std::abs(j.laplacian()), 1e-12 * scale);
  }
}

TEST(Dilation, Errors) {
  expect_code(ErrorCode::zero_slope, [] { DilationMP(DilationInvariant(3, {1.0}, {1.0, 1.0}), 0.0, 1.0); });
  expect_code(ErrorCode::degenerate_discriminant, [] { DilationMP(DilationParams{3, {1.0}, {1.0}, 1.0, 1.0, 1}); });
}

TEST(Solutions, AllFamiliesPassResidualChecks) {
  std::vector<SystemInstance> systems;
  systems.push_back(build_multicenter(3, {Point({1.0, 0.0, 0.0}), Point({-1.0, 0.0, 0.0})}, {1.0, 2.0}, 1.0, -1.0));
  systems.push_back(build_multicenter(5, {Point({0.0, 0.0, 0.0, 0.0, 0.0})}, {0.7}, 2.0, -0.5, -1));
  systems.push_back(build_dilation(DilationInvariant(4, {1.0, 1.0}, {1.0, -1.0, 2.0}), 1.0, 2.0));
  systems.push_back(build_dilation(DilationInvariant(3, {1.0}, {1.0, 1.0}), -1.0, 3.0));
  CounterRng rng(41);
  for (const auto& sys : systems) {
    for (int t = 0; t < 300; ++t) {
      const auto p = evtest::random_point_where(rng, sys.n, -3.0, 3.0, [&](const Point& q) {
        if (!in_domain(sys)(q)) return false;
        return true;
      });
      EXPECT_LE(max_normalized(evaluate_residuals(sys, p)), 1e-9);
    }
  }
}

TEST(Solutions, IdentityResiduals) {
  const auto mc = build_multicenter(4, {Point({0.0, 0.0, 0.0, 0.0}), Point({1.0, 1.0, 0.0, 0.0})}, {1.0, 0.5},
                                    1.0, -1.0);
  const auto dil = build_dilation(DilationInvariant(3, {1.0}, {1.0, 1.0}), 1.0, 2.0);
  CounterRng rng(3);
  for (const auto* sys : {&mc, &dil}) {
    for (int t = 0; t < 100; ++t) {
      const auto p = evtest::random_point_where(rng, sys->n, -2.0, 2.0, in_domain(*sys));
      const auto r = mp_identity_residuals(*sys, p);
      EXPECT_LE(r.phi_relative(), 1e-10);
      EXPECT_LE(r.psi_relative(), 1e-10);
    }
  }
  const auto m = mp_identity_residuals(minkowski(3), Point({1.0, 2.0, 3.0}));
  EXPECT_EQ(m.phi, 0.0);
  EXPECT_EQ(m.psi, 0.0);
}

TEST(Solutions, CorruptedConformalFactorIsDetected) {
  auto sys = build_multicenter(3, {Point({0.0, 0.0, 0.0})}, {1.0}, 1.0, -1.0);
  sys.phi = fields::pow(sys.lapse, 0.5);  // N^{1/(n-1)} instead of N^{1/(n-2)}
  const Point p({1.0, 0.5, 0.0});
  const auto r = mp_identity_residuals(sys, p);
  const auto j = sys.lapse.eval(p);
  // |grad N / N| |(n-2)/(n-1) - 1| in the max-component norm
  double expect = 0.0;
  for (std::size_t k = 0; k < 3; ++k) expect = std::max(expect, std::abs(j.grad(k) / j.value()) * 0.5);
  EXPECT_NEAR(r.phi, expect, 1e-14);
  EXPECT_GT(r.phi, 0.1);
}

TEST(Solutions, BuildFromSpec) {
  SolutionSpec spec;
  spec.family = MultiCenterParams{3, {Point({0.0, 0.0, 0.0})}, {1.0}, 1.0, -1.0, 1, default_center_eps};
  spec.cosmological_constant = 1e-3;
  const auto sys = build_solution(spec);
  EXPECT_EQ(sys.cosmological_constant, 1e-3);
  EXPECT_EQ(family_name(spec.family), "multicenter");
  EXPECT_EQ(solution_dim(spec.family), 3u);
  const Point p({1.0, 1.0, 0.0});
  // Lambda = 1e-3 on an MP solution: the trace channel reads 2 Lambda exactly up to rounding
  EXPECT_NEAR(residual_trace(sys, p), 2e-3, 1e-12);

  spec.cosmological_constant = 0.0;
  spec.lapse_perturbation = 1e-3;
  const auto pert = build_solution(spec);
  EXPECT_DOUBLE_EQ(pert.lapse.value(p), build_multicenter(3, {Point({0.0, 0.0, 0.0})}, {1.0}, 1.0, -1.0).lapse.value(p) *
                                            (1.0 + 1e-3));
}
