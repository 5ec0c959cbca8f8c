// SPDX-License-Identifier: MIT

#include <electrovac/finite_difference.hpp>
#include <electrovac/invariants.hpp>

#include <gtest/gtest.h>

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

auto box(std::size_t n, double lo, double hi) -> SeparabilityOptions {
  SeparabilityOptions o;
  o.box_min.assign(n, lo);
  o.box_max.assign(n, hi);
  return o;
}

}  // namespace

TEST(DilationInvariant, JetAtWorkedPoint) {
  const DilationInvariant inv(3, {1.0}, {1.0, 1.0});
  const auto j = inv.xi_jet(Point({1.0, 0.0, 0.0}));
  EXPECT_EQ(j.value(), 1.0);
  EXPECT_EQ(j.grad(0), 0.0);
  EXPECT_EQ(j.grad(1), -1.0);
  EXPECT_EQ(j.grad(2), 0.0);
}

TEST(DilationInvariant, QuadraticCoefficients) {
  struct Case {
    std::size_t n;
    std::vector<double> a, b;
    double eta, theta, delta, D;
  };
  for (const auto& c : {Case{3, {1.0}, {1.0, 1.0}, 2, -2, 1, 4}, Case{4, {1.0, 1.0}, {1.0, -1.0, 2.0}, 6, 0, 2, 48},
                        Case{3, {2.0}, {3.0, 4.0}, 25, -12, 4, 256}}) {
    const auto q = quadratic_coefficients(DilationInvariant(c.n, c.a, c.b));
    EXPECT_EQ(q.eta, c.eta);
    EXPECT_EQ(q.theta, c.theta);
    EXPECT_EQ(q.delta, c.delta);
    EXPECT_EQ(q.discriminant(), c.D);
  }
}

TEST(DilationInvariant, ConstructionErrors) {
  expect_code(ErrorCode::invalid_argument, [] { DilationInvariant(3, {}, {1.0}); });
  expect_code(ErrorCode::invalid_argument, [] { DilationInvariant(3, {1.0, 1.0}, {1.0}); });
  expect_code(ErrorCode::invalid_argument, [] { DilationInvariant(3, {1.0}, {1.0, 1.0, 1.0, 1.0}); });
  expect_code(ErrorCode::invalid_argument, [] { DilationInvariant(3, {1.0, -1.0}, {1.0, 1.0}); });
  expect_code(ErrorCode::invalid_argument, [] { DilationInvariant(3, {1.0}, {1.0, 0.0}); });
  expect_code(ErrorCode::degenerate_discriminant, [] { DilationInvariant(3, {2.0}, {1.0}); });
  expect_code(ErrorCode::degenerate_discriminant, [] { DilationInvariant(3, {1.0, 1.0}, {2.0, 2.0}); });
}

TEST(DilationInvariant, FundamentalRelation) {
  EXPECT_LE(fundamental_relation_residual(DilationInvariant(3, {1.0}, {1.0, 1.0}), Point({1.0, 0.0, 0.0})), 1e-12);
  EXPECT_LE(fundamental_relation_residual(DilationInvariant(4, {1.0, 1.0}, {1.0, -1.0, 2.0}),
                                          Point({0.0, 1.0, 1.0, 0.0})),
            1e-12);
  expect_code(ErrorCode::singular_point, [] {
    fundamental_relation_residual(DilationInvariant(3, {1.0}, {1.0, 1.0}), Point({1.0, -1.0, 0.0}));
  });
}

TEST(DilationInvariant, QuadraticIdentityAndScaleInvarianceProperty) {
  CounterRng rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 3 + trial % 3;
    const std::size_t m2 = 1 + rng.next_u64() % n;
    const std::size_t m1 = 1 + rng.next_u64() % m2;
    std::vector<double> a(m1), b(m2);
    for (auto& x : a) x = rng.uniform(0.2, 2.0);
    for (auto& x : b) x = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.2, 2.0);
    std::optional<DilationInvariant> inv;
    try {
      inv.emplace(n, a, b);
    } catch (const Error&) {
      continue;  // proportional draw
    }
    const auto q = inv->quadratic_coefficients();
    for (int t = 0; t < 20; ++t) {
      const auto p = evtest::random_point_where(rng, n, -2.0, 2.0,
                                                [&](const Point& x) { return std::abs(inv->denominator(x)) > 0.1; });
      const auto j = inv->xi_jet(p);
      const double P = inv->denominator(p);
      const double lhs = P * P * j.grad_norm2();
      EXPECT_LE(std::abs(lhs - q(j.value())), 1e-10 * (1.0 + std::abs(q(j.value()))));
      EXPECT_LE(fundamental_relation_residual(*inv, p), 1e-10 * (1.0 + std::abs(j.laplacian())));
      for (double s : {0.5, 2.0, 10.0}) EXPECT_LE(evtest::rel_diff(inv->xi_jet(p.scaled(s)).value(), j.value()), 1e-14);
    }
  }
}

TEST(QuadricInvariant, LinearCase) {
  const QuadricInvariant inv(0.0, {1.0, 0.0, 0.0}, {0.0, 0.0, 0.0});
  const auto j = inv.xi_jet(Point({0.7, -3.0, 2.0}));
  EXPECT_EQ(j.value(), 0.7);
  EXPECT_EQ(j.grad(0), 1.0);
  EXPECT_EQ(j.grad(1), 0.0);
  for (std::size_t a = 0; a < 3; ++a)
    for (std::size_t b = 0; b < 3; ++b) EXPECT_EQ(j.hess(a, b), 0.0);
  EXPECT_EQ(*inv.level_ratio(0.7), 0.0);
}

TEST(QuadricInvariant, GradientNormAndRatio) {
  const QuadricInvariant inv(0.5, {1.0, -2.0, 0.0, 0.5}, {0.1, 0.0, -0.3, 0.2});
  CounterRng rng(2);
  for (int t = 0; t < 100; ++t) {
    const auto p = evtest::random_point(rng, 4, -2.0, 2.0);
    const auto j = inv.xi_jet(p);
    EXPECT_NEAR(j.grad_norm2(), 4.0 * inv.tau() * j.value() + inv.beta(), 1e-12 * (1.0 + j.grad_norm2()));
    if (j.grad_norm2() > 1e-6) {
      EXPECT_NEAR(j.laplacian() / j.grad_norm2(), *inv.level_ratio(j.value()), 1e-9);
    }
  }
  expect_code(ErrorCode::invalid_argument, [] { QuadricInvariant(0.0, {0.0, 0.0, 0.0}, {1.0, 0.0, 0.0}); });
}

TEST(HarmonicPoleInvariant, HarmonicAwayFromCenters) {
  const HarmonicPoleInvariant one({Point({0.0, 0.0, 0.0})}, {1.0});
  const auto j = one.xi_jet(Point({1.0, 1.0, 1.0}));
  EXPECT_NEAR(j.value(), -1.0 / std::sqrt(3.0), 1e-15);
  EXPECT_LE(std::abs(j.laplacian()), 1e-15);

  const std::vector<Point> centers{Point({1.0, 0.0, 0.0, 0.0}), Point({-1.0, 0.5, 0.0, 0.0}),
                                   Point({0.0, 0.0, 1.0, -1.0})};
  const HarmonicPoleInvariant three(centers, {1.0, 2.0, -0.5});
  CounterRng rng(8);
  for (int t = 0; t < 200; ++t) {
    const auto p = evtest::random_point_where(rng, 4, -2.0, 2.0,
                                              [&](const Point& x) { return evtest::min_distance(x, centers) > 0.05; });
    const auto jp = three.xi_jet(p);
    EXPECT_LE(std::abs(jp.laplacian()), 1e-9 * (1.0 + std::abs(jp.hess(0, 0))));
  }
}

TEST(HarmonicPoleInvariant, Errors) {
  expect_code(ErrorCode::coincident_centers,
              [] { HarmonicPoleInvariant({Point({1.0, 0.0, 0.0}), Point({1.0, 0.0, 0.0})}, {1.0, 1.0}); });
  expect_code(ErrorCode::invalid_argument, [] { HarmonicPoleInvariant({Point({1.0, 0.0, 0.0})}, {0.0}); });
  const HarmonicPoleInvariant inv({Point({0.0, 0.0, 0.0})}, {1.0});
  expect_code(ErrorCode::singular_point, [&] { inv.xi_jet(Point({1e-7, 0.0, 0.0})); });
}

TEST(Invariants, AnalyticJetsMatchCompositionAndFiniteDifferences) {
  std::vector<std::pair<AnyInvariant, std::function<bool(const Point&)>>> cases;
  cases.emplace_back(QuadricInvariant(0.7, {1.0, 0.0, -1.0}, {0.2, 0.0, 0.1}), [](const Point&) { return true; });
  const DilationInvariant dil(4, {1.0, 1.0}, {1.0, -1.0, 2.0});
  cases.emplace_back(dil, [dil](const Point& x) { return std::abs(dil.denominator(x)) > 0.2; });
  const std::vector<Point> centers{Point({0.5, 0.0, 0.0}), Point({-0.5, 0.5, 0.0})};
  cases.emplace_back(HarmonicPoleInvariant(centers, {1.0, 0.5}),
                     [centers](const Point& x) { return evtest::min_distance(x, centers) > 0.2; });

  CounterRng rng(13);
  for (const auto& [inv, ok] : cases) {
    const auto analytic = invariant_field(inv);
    const auto composite = std::visit([](const auto& i) { return i.composite_field(); }, inv);
    const auto n = invariant_dim(inv);
    for (int t = 0; t < 500; ++t) {
      const auto p = evtest::random_point_where(rng, n, -2.0, 2.0, ok);
      const auto j = analytic.eval(p);
      const auto dc = evtest::jet_diff(composite.eval(p), j);
      EXPECT_LE(std::max({dc.value, dc.gradient, dc.hessian}), 1e-12);
      const auto df = evtest::jet_diff(fd_jet_chained(analytic, p, 1e-5), j);
      EXPECT_LE(std::max(df.gradient, df.hessian), 1e-6);
    }
  }
}

TEST(Separability, DilationIsSeparable) {
  const DilationInvariant inv(3, {1.0}, {1.0, 1.0});
  auto opt = box(3, -2.0, 2.0);
  const auto r = separability_check(inv.field(), {-0.5, 0.25, 1.0, 3.0}, 20, 1, opt);
  EXPECT_TRUE(r.separable);
  ASSERT_EQ(r.levels.size(), 4u);
  for (const auto& l : r.levels) {
    EXPECT_EQ(l.samples, 20u);
    EXPECT_LE(l.ratio_spread, 1e-10);
    const double expect = *inv.level_ratio(l.level);
    EXPECT_NEAR(l.ratio_min, expect, 1e-8 * (1.0 + std::abs(expect)));
  }
}

TEST(Separability, LinearQuadricHasZeroSpread) {
  const QuadricInvariant inv(0.0, {1.0, 0.0, 0.0}, {0.0, 0.0, 0.0});
  const auto r = separability_check(inv.field(), {0.0, 1.0}, 10, 2, box(3, -2.0, 2.0));
  EXPECT_TRUE(r.separable);
  for (const auto& l : r.levels) EXPECT_EQ(l.ratio_spread, 0.0);
}

TEST(Separability, CubicCounterexample) {
  // on xi = 0: (0,0,z) gives ratio 0, (-1,1,z) gives 6/10
  const auto xi = fields::coordinate(0) + fields::pow(fields::coordinate(1), 3.0);
  const auto j0 = xi.eval(Point({0.0, 0.0, 0.3}));
  const auto j1 = xi.eval(Point({-1.0, 1.0, 0.3}));
  EXPECT_EQ(j0.laplacian() / j0.grad_norm2(), 0.0);
  EXPECT_NEAR(j1.laplacian() / j1.grad_norm2(), 0.6, 1e-15);
  const auto r = separability_check(xi, {0.0}, 30, 3, box(3, -2.0, 2.0));
  EXPECT_FALSE(r.separable);
  EXPECT_GT(r.levels[0].ratio_spread, 0.1);
}

TEST(Separability, Errors) {
  const auto xi = fields::coordinate(0);
  expect_code(ErrorCode::empty_level_set, [&] { separability_check(xi, {10.0}, 5, 1, box(3, -1.0, 1.0)); });
  // x1^3 = 0 is a critical level
  const auto cube = fields::pow(fields::coordinate(0), 3.0);
  expect_code(ErrorCode::degenerate_gradient, [&] { separability_check(cube, {0.0}, 5, 1, box(3, -1.0, 1.0)); });
}

TEST(Separability, Deterministic) {
  const DilationInvariant inv(3, {1.0}, {1.0, 1.0});
  const auto a = separability_check(inv.field(), {0.3}, 10, 9, box(3, -2.0, 2.0));
  const auto b = separability_check(inv.field(), {0.3}, 10, 9, box(3, -2.0, 2.0));
  EXPECT_EQ(a.levels[0].ratio_min, b.levels[0].ratio_min);
  EXPECT_EQ(a.levels[0].ratio_max, b.levels[0].ratio_max);
}
