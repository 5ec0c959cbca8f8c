// SPDX-License-Identifier: MIT

#include <electrovac/field.hpp>
#include <electrovac/finite_difference.hpp>
#include <electrovac/jet.hpp>

#include <gtest/gtest.h>

#include "support.hpp"

using namespace electrovac;

namespace {

auto mixed_field() -> ScalarField {
  auto x1 = fields::coordinate(0);
  auto x2 = fields::coordinate(1);
  auto x3 = fields::coordinate(2);
  return fields::exp(x1) * x2 / (1.0 + x3 * x3) + fields::atan(x1 * x2) -
         fields::sqrt(2.0 + x3) * fields::log(1.0 + x1 * x1);
}

void expect_code(ErrorCode code, const std::function<void()>& f) {
  try {
    f();
    ADD_FAILURE() << "expected " << to_string(code);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), code) << e.what();
  }
}

}  // namespace

TEST(Point, RejectsLowDimensionAndNonFinite) {
  expect_code(ErrorCode::dimension_mismatch, [] { Point({1.0, 2.0}); });
  expect_code(ErrorCode::invalid_argument, [] { Point({1.0, NAN, 0.0}); });
  Point p({1.0, 2.0, 2.0});
  EXPECT_DOUBLE_EQ(p.norm(), 3.0);
  EXPECT_EQ(p.scaled(2.0), Point({2.0, 4.0, 4.0}));
  EXPECT_EQ(p.shifted(1, 0.5), Point({1.0, 2.5, 2.0}));
}

TEST(Jet, ConstantAndCoordinate) {
  Point p({0.5, -1.0, 2.0});
  auto c = fields::constant(3.0).eval(p);
  EXPECT_EQ(c.value(), 3.0);
  EXPECT_EQ(c.grad_norm2(), 0.0);
  auto x2 = fields::coordinate(1).eval(p);
  EXPECT_EQ(x2.value(), -1.0);
  EXPECT_EQ(x2.grad(1), 1.0);
  EXPECT_EQ(x2.grad(0), 0.0);
  EXPECT_EQ(x2.laplacian(), 0.0);
}

TEST(Jet, CoordinateBeyondDimension) {
  expect_code(ErrorCode::dimension_mismatch, [] { fields::coordinate(3).eval(Point({1.0, 2.0, 3.0})); });
}

TEST(Jet, MixedExpressionMatchesSymbolicOracle) {
  // values frozen from symbolic differentiation
  const Point p({0.3, -1.2, 0.5});
  const auto j = mixed_field().eval(p);
  const double value = -1.7776789376686033;
  const double grad[3] = {-3.2285390510362277, 1.345467782604712, 1.0094397838555849};
  const double hess[3][3] = {{-2.9054023391965753, 1.7620207603190021, 0.8626212343008449},
                             {1.7620207603190021, 0.050783851888707876, -0.863909636848642},
                             {0.8626212343008449, -0.863909636848642, 0.42012698175990526}};
  EXPECT_NEAR(j.value(), value, 1e-14);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_NEAR(j.grad(i), grad[i], 1e-14);
    for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(j.hess(i, k), hess[i][k], 1e-13);
  }
}

TEST(Jet, HessianIsSymmetric) {
  CounterRng rng(11);
  const auto f = mixed_field();
  for (int t = 0; t < 50; ++t) {
    const auto p = evtest::random_point(rng, 3, -1.0, 1.0);
    const auto j = f.eval(p);
    for (std::size_t a = 0; a < 3; ++a) {
      for (std::size_t b = 0; b < 3; ++b) EXPECT_EQ(j.hess(a, b), j.hess(b, a));
    }
  }
}

TEST(Jet, ProductAndQuotientRules) {
  CounterRng rng(5);
  const auto u = fields::exp(fields::coordinate(0)) + fields::coordinate(2);
  const auto v = 2.0 + fields::coordinate(1) * fields::coordinate(1);
  for (int t = 0; t < 50; ++t) {
    const auto p = evtest::random_point(rng, 4, -1.5, 1.5);
    const auto ju = u.eval(p), jv = v.eval(p);
    const auto prod = (u * v).eval(p);
    const auto back = ((u * v) / v).eval(p);
    for (std::size_t a = 0; a < 4; ++a) {
      EXPECT_NEAR(prod.grad(a), ju.grad(a) * jv.value() + ju.value() * jv.grad(a), 1e-13);
      for (std::size_t b = 0; b < 4; ++b) {
        const double expect = ju.hess(a, b) * jv.value() + ju.grad(a) * jv.grad(b) + ju.grad(b) * jv.grad(a) +
                              ju.value() * jv.hess(a, b);
        EXPECT_NEAR(prod.hess(a, b), expect, 1e-12);
      }
    }
    const auto d = evtest::jet_diff(back, ju);
    EXPECT_LT(d.hessian, 1e-13);
  }
}

TEST(Jet, PowerSpecialCasesStayExact) {
  const Point origin({0.0, 0.0, 0.0});
  const auto x = fields::coordinate(0);
  const auto sq = fields::pow(x, 2.0).eval(origin);
  EXPECT_EQ(sq.value(), 0.0);
  EXPECT_EQ(sq.hess(0, 0), 2.0);
  EXPECT_EQ(fields::pow(x, 0.0).eval(origin).value(), 1.0);
  expect_code(ErrorCode::singular_point, [&] { fields::pow(x, 0.5).eval(origin); });
  expect_code(ErrorCode::singular_point, [&] { fields::pow(x, -1.0).eval(origin); });
  EXPECT_NEAR(fields::pow(x, -3.0).eval(Point({-2.0, 0.0, 0.0})).value(), -0.125, 1e-15);
}

TEST(Jet, SingularNodesRefuse) {
  const Point p({0.0, 1.0, 1.0});
  const auto x = fields::coordinate(0);
  expect_code(ErrorCode::singular_point, [&] { (fields::constant(1.0) / x).eval(p); });
  expect_code(ErrorCode::singular_point, [&] { fields::log(x).eval(p); });
  expect_code(ErrorCode::singular_point, [&] { fields::sqrt(x).eval(p); });
  EXPECT_TRUE((fields::constant(1.0) / x).singular_at(p));
  EXPECT_FALSE((fields::constant(1.0) / x).singular_at(Point({1.0, 1.0, 1.0})));
}

TEST(Jet, NonFiniteResultIsReported) {
  const auto big = fields::exp(fields::coordinate(0));
  expect_code(ErrorCode::non_finite_result, [&] { big.eval(Point({1000.0, 0.0, 0.0})); });
}

namespace {

class Ramp final : public Profile1D {
 public:
  auto eval(double t) const -> Taylor2 override { return {t * t * t, 3.0 * t * t, 6.0 * t}; }
  auto lower() const -> double override { return -1.0; }
  auto upper() const -> double override { return 1.0; }
};

}  // namespace

TEST(Jet, ComposeWithProfileAndRange) {
  const auto f = fields::compose(std::make_shared<Ramp>(), fields::coordinate(0) + fields::coordinate(1));
  const auto j = f.eval(Point({0.25, 0.25, 7.0}));
  EXPECT_DOUBLE_EQ(j.value(), 0.125);
  EXPECT_DOUBLE_EQ(j.grad(0), 0.75);
  EXPECT_DOUBLE_EQ(j.hess(0, 1), 3.0);
  EXPECT_EQ(j.grad(2), 0.0);
  expect_code(ErrorCode::out_of_profile_range, [&] { f.eval(Point({1.0, 0.5, 0.0})); });
}

TEST(FiniteDifference, ValueStencilAgreesWithJets) {
  CounterRng rng(3);
  const auto f = mixed_field();
  for (int t = 0; t < 100; ++t) {
    const auto p = evtest::random_point(rng, 3, -1.0, 1.0);
    const auto d = evtest::jet_diff(fd_jet(f, p, FdSteps{1e-5, 1e-4}), f.eval(p));
    EXPECT_LT(d.gradient, 1e-6);
    EXPECT_LT(d.hessian, 1e-6);
  }
}

TEST(FiniteDifference, ChainedStencilAgreesAtBothSteps) {
  CounterRng rng(4);
  const auto f = mixed_field();
  for (double h : {1e-4, 1e-5}) {
    for (int t = 0; t < 100; ++t) {
      const auto p = evtest::random_point(rng, 3, -1.0, 1.0);
      const auto d = evtest::jet_diff(fd_jet_chained(f, p, h), f.eval(p));
      EXPECT_LT(d.gradient, 1e-6) << "h=" << h;
      EXPECT_LT(d.hessian, 1e-7) << "h=" << h;
    }
  }
}

TEST(FiniteDifference, ChainedStencilDetectsWrongHessian) {
  // a node whose gradient is right but whose Hessian is off by a constant
  class Skewed final : public FieldNode {
   public:
    auto eval(const Point& p) const -> Jet2 override {
      auto j = Jet2::coordinate(p, 0) * Jet2::coordinate(p, 1);
      j.set_hess(0, 1, j.hess(0, 1) + 0.1);
      return j;
    }
  };
  const ScalarField f(std::make_shared<Skewed>());
  const Point p({0.3, 0.4, 0.5});
  EXPECT_GT(evtest::jet_diff(fd_jet_chained(f, p, 1e-5), f.eval(p)).hessian, 0.05);
}

TEST(FiniteDifference, RejectsBadStep) {
  expect_code(ErrorCode::invalid_argument, [] { fd_jet(fields::coordinate(0), Point({0.0, 0.0, 0.0}), 0.0); });
}
