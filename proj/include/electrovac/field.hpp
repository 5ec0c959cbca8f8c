// SPDX-License-Identifier: MIT
/**
    \file
    \brief scalar fields on R^n evaluated as second-order jets

    A ScalarField is an immutable expression tree. Leaves are constants,
    coordinate projections, linear forms or closed-form families; interior
    nodes are arithmetic, elementary functions and composition with a 1-D
    profile. Nodes that can blow up (quotient, log, sqrt, real powers) refuse
    to evaluate on their declared singular set.
*/

#pragma once

#include <electrovac/error.hpp>
#include <electrovac/jet.hpp>

#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace electrovac {

/// Threshold below which denominators and radicands count as singular.
inline constexpr double default_singular_eps = 1e-12;

class FieldNode {
 public:
  virtual ~FieldNode() = default;
  virtual auto eval(const Point& p) const -> Jet2 = 0;
};

/// A smooth function of one variable, with its first two derivatives.
class Profile1D {
 public:
  virtual ~Profile1D() = default;
  virtual auto eval(double t) const -> Taylor2 = 0;
  virtual auto lower() const -> double { return -std::numeric_limits<double>::infinity(); }
  virtual auto upper() const -> double { return std::numeric_limits<double>::infinity(); }
};

class ScalarField {
 public:
  ScalarField() = default;
  explicit ScalarField(std::shared_ptr<const FieldNode> node) : node_(std::move(node)) {}

  auto eval(const Point& p) const -> Jet2 {
    if (!node_) throw Error(ErrorCode::invalid_argument, "empty field");
    auto j = node_->eval(p);
    if (j.dim() != p.dim()) throw Error(ErrorCode::dimension_mismatch, "field produced wrong jet size");
    if (!j.all_finite()) throw Error(ErrorCode::non_finite_result, "field jet is not finite");
    return j;
  }

  auto value(const Point& p) const -> double { return eval(p).value(); }

  /// True when evaluation is refused at p.
  auto singular_at(const Point& p) const -> bool {
    try {
      (void)eval(p);
      return false;
    } catch (const Error& e) {
      if (e.code() == ErrorCode::singular_point || e.code() == ErrorCode::non_finite_result) return true;
      throw;
    }
  }

  auto node() const noexcept -> const std::shared_ptr<const FieldNode>& { return node_; }

 private:
  std::shared_ptr<const FieldNode> node_;
};

inline auto eval_jet(const ScalarField& field, const Point& p) -> Jet2 { return field.eval(p); }

namespace nodes {

class Constant final : public FieldNode {
 public:
  explicit Constant(double c) : c_(c) {}
  auto eval(const Point& p) const -> Jet2 override { return Jet2::constant(p.dim(), c_); }

 private:
  double c_;
};

class Coordinate final : public FieldNode {
 public:
  explicit Coordinate(std::size_t axis) : axis_(axis) {}
  auto eval(const Point& p) const -> Jet2 override {
    if (axis_ >= p.dim()) {
      throw Error(ErrorCode::dimension_mismatch,
                  "coordinate x" + std::to_string(axis_ + 1) + " on a point of dimension " +
                      std::to_string(p.dim()));
    }
    return Jet2::coordinate(p, axis_);
  }

 private:
  std::size_t axis_;
};

/// sum_k w_k x_k + offset, over the first w.size() axes.
class Linear final : public FieldNode {
 public:
  Linear(std::vector<double> weights, double offset) : w_(std::move(weights)), offset_(offset) {}
  auto eval(const Point& p) const -> Jet2 override {
    if (w_.size() > p.dim()) throw Error(ErrorCode::dimension_mismatch, "linear form longer than point");
    double v = offset_;
    Jet2 j(p.dim());
    for (std::size_t k = 0; k < w_.size(); ++k) {
      v += w_[k] * p[k];
      j.set_grad(k, w_[k]);
    }
    j.set_value(v);
    return j;
  }

 private:
  std::vector<double> w_;
  double offset_;
};

class Sum final : public FieldNode {
 public:
  Sum(ScalarField a, ScalarField b) : a_(std::move(a)), b_(std::move(b)) {}
  auto eval(const Point& p) const -> Jet2 override { return a_.eval(p) + b_.eval(p); }

 private:
  ScalarField a_, b_;
};

class Difference final : public FieldNode {
 public:
  Difference(ScalarField a, ScalarField b) : a_(std::move(a)), b_(std::move(b)) {}
  auto eval(const Point& p) const -> Jet2 override { return a_.eval(p) - b_.eval(p); }

 private:
  ScalarField a_, b_;
};

class Scale final : public FieldNode {
 public:
  Scale(double s, ScalarField a) : s_(s), a_(std::move(a)) {}
  auto eval(const Point& p) const -> Jet2 override { return s_ * a_.eval(p); }

 private:
  double s_;
  ScalarField a_;
};

class Shift final : public FieldNode {
 public:
  Shift(ScalarField a, double c) : a_(std::move(a)), c_(c) {}
  auto eval(const Point& p) const -> Jet2 override { return a_.eval(p) + c_; }

 private:
  ScalarField a_;
  double c_;
};

class Product final : public FieldNode {
 public:
  Product(ScalarField a, ScalarField b) : a_(std::move(a)), b_(std::move(b)) {}
  auto eval(const Point& p) const -> Jet2 override { return a_.eval(p) * b_.eval(p); }

 private:
  ScalarField a_, b_;
};

class Quotient final : public FieldNode {
 public:
  Quotient(ScalarField a, ScalarField b, double eps) : a_(std::move(a)), b_(std::move(b)), eps_(eps) {}
  auto eval(const Point& p) const -> Jet2 override {
    auto den = b_.eval(p);
    if (std::abs(den.value()) < eps_) throw Error(ErrorCode::singular_point, "quotient denominator vanishes");
    return a_.eval(p) / den;
  }

 private:
  ScalarField a_, b_;
  double eps_;
};

enum class UnaryKind { log, exp, sqrt, atan };

class Unary final : public FieldNode {
 public:
  Unary(UnaryKind kind, ScalarField a, double eps) : kind_(kind), a_(std::move(a)), eps_(eps) {}
  auto eval(const Point& p) const -> Jet2 override {
    auto inner = a_.eval(p);
    const double x = inner.value();
    switch (kind_) {
      case UnaryKind::log:
        if (x <= eps_) throw Error(ErrorCode::singular_point, "log of non-positive argument");
        return compose(unary::log(x), inner);
      case UnaryKind::exp:
        return compose(unary::exp(x), inner);
      case UnaryKind::sqrt:
        if (x <= eps_) throw Error(ErrorCode::singular_point, "sqrt at or below zero");
        return compose(unary::sqrt(x), inner);
      case UnaryKind::atan:
        return compose(unary::atan(x), inner);
    }
    throw Error(ErrorCode::invalid_argument, "unknown unary kind");
  }

 private:
  UnaryKind kind_;
  ScalarField a_;
  double eps_;
};

/// F^e for real e. Non-integer exponents need F > 0; negative ones need F != 0.
class Power final : public FieldNode {
 public:
  Power(ScalarField a, double exponent, double eps) : a_(std::move(a)), e_(exponent), eps_(eps) {}
  auto eval(const Point& p) const -> Jet2 override {
    auto inner = a_.eval(p);
    const double x = inner.value();
    const bool integral = std::floor(e_) == e_;
    if (!integral && x <= eps_) throw Error(ErrorCode::singular_point, "real power of non-positive base");
    if (e_ < 0.0 && std::abs(x) < eps_) throw Error(ErrorCode::singular_point, "negative power at zero");
    if (integral && e_ >= 0.0 && e_ <= 2.0) {
      // keep small integer powers exact at x = 0
      if (e_ == 0.0) return Jet2::constant(p.dim(), 1.0);
      if (e_ == 1.0) return inner;
      return compose({x * x, 2.0 * x, 2.0}, inner);
    }
    return compose(unary::pow(x, e_), inner);
  }

 private:
  ScalarField a_;
  double e_;
  double eps_;
};

/// u(F) for a 1-D profile u; refuses points where F leaves the profile domain.
class Compose final : public FieldNode {
 public:
  Compose(std::shared_ptr<const Profile1D> outer, ScalarField inner)
      : outer_(std::move(outer)), inner_(std::move(inner)) {}
  auto eval(const Point& p) const -> Jet2 override {
    auto in = inner_.eval(p);
    const double t = in.value();
    if (t < outer_->lower() || t > outer_->upper()) {
      throw Error(ErrorCode::out_of_profile_range, "invariant value " + std::to_string(t) +
                                                       " outside profile range");
    }
    return compose(outer_->eval(t), in);
  }

 private:
  std::shared_ptr<const Profile1D> outer_;
  ScalarField inner_;
};

}  // namespace nodes

namespace fields {

inline auto constant(double c) -> ScalarField { return ScalarField(std::make_shared<nodes::Constant>(c)); }

/// x_{axis+1}; axes are zero-based.
inline auto coordinate(std::size_t axis) -> ScalarField {
  return ScalarField(std::make_shared<nodes::Coordinate>(axis));
}

inline auto linear(std::vector<double> weights, double offset = 0.0) -> ScalarField {
  return ScalarField(std::make_shared<nodes::Linear>(std::move(weights), offset));
}

inline auto log(ScalarField a, double eps = 0.0) -> ScalarField {
  return ScalarField(std::make_shared<nodes::Unary>(nodes::UnaryKind::log, std::move(a), eps));
}
inline auto exp(ScalarField a) -> ScalarField {
  return ScalarField(std::make_shared<nodes::Unary>(nodes::UnaryKind::exp, std::move(a), 0.0));
}
inline auto sqrt(ScalarField a, double eps = default_singular_eps) -> ScalarField {
  return ScalarField(std::make_shared<nodes::Unary>(nodes::UnaryKind::sqrt, std::move(a), eps));
}
inline auto atan(ScalarField a) -> ScalarField {
  return ScalarField(std::make_shared<nodes::Unary>(nodes::UnaryKind::atan, std::move(a), 0.0));
}
inline auto pow(ScalarField a, double exponent, double eps = default_singular_eps) -> ScalarField {
  return ScalarField(std::make_shared<nodes::Power>(std::move(a), exponent, eps));
}
inline auto quotient(ScalarField a, ScalarField b, double eps = default_singular_eps) -> ScalarField {
  return ScalarField(std::make_shared<nodes::Quotient>(std::move(a), std::move(b), eps));
}
inline auto compose(std::shared_ptr<const Profile1D> outer, ScalarField inner) -> ScalarField {
  return ScalarField(std::make_shared<nodes::Compose>(std::move(outer), std::move(inner)));
}

}  // namespace fields

inline auto operator+(ScalarField a, ScalarField b) -> ScalarField {
  return ScalarField(std::make_shared<nodes::Sum>(std::move(a), std::move(b)));
}
inline auto operator-(ScalarField a, ScalarField b) -> ScalarField {
  return ScalarField(std::make_shared<nodes::Difference>(std::move(a), std::move(b)));
}
inline auto operator*(ScalarField a, ScalarField b) -> ScalarField {
  return ScalarField(std::make_shared<nodes::Product>(std::move(a), std::move(b)));
}
inline auto operator/(ScalarField a, ScalarField b) -> ScalarField { return fields::quotient(std::move(a), std::move(b)); }
inline auto operator*(double s, ScalarField a) -> ScalarField {
  return ScalarField(std::make_shared<nodes::Scale>(s, std::move(a)));
}
inline auto operator+(ScalarField a, double c) -> ScalarField {
  return ScalarField(std::make_shared<nodes::Shift>(std::move(a), c));
}
inline auto operator+(double c, ScalarField a) -> ScalarField { return std::move(a) + c; }
inline auto operator-(ScalarField a, double c) -> ScalarField { return std::move(a) + (-c); }
inline auto operator-(double c, ScalarField a) -> ScalarField { return (-1.0 * std::move(a)) + c; }
inline auto operator-(ScalarField a) -> ScalarField { return -1.0 * std::move(a); }

}  // namespace electrovac
