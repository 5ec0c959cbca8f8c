// SPDX-License-Identifier: MIT
/**
    \file
    \brief sampling regions, residual aggregation and reports

    verify() samples a region with a counter-based RNG, evaluates every residual
    channel at each point (possibly on several threads) and aggregates in a
    sorted order, so a report depends only on its inputs and seed.
*/

#pragma once

#include <electrovac/error.hpp>
#include <electrovac/field.hpp>
#include <electrovac/jet.hpp>
#include <electrovac/random.hpp>
#include <electrovac/residuals.hpp>

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

namespace electrovac {

// ---------------------------------------------------------------------------------------------
// regions

struct ExcludedBall {
  Point center;
  double radius = 0.0;
};

/// Rejects |normal . x + offset| <= margin (1 + |x|).
struct ExcludedSlab {
  std::vector<double> normal;
  double offset = 0.0;
  double margin = 1e-6;
};

/// Keeps points with lo <= field(x) <= hi.
struct FieldWindow {
  std::string name;
  ScalarField field;
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
};

struct Region {
  std::vector<double> box_min;
  std::vector<double> box_max;
  std::vector<ExcludedBall> balls;
  std::vector<ExcludedSlab> slabs;
  std::vector<FieldWindow> windows;
  bool require_positive_lapse = true;

  auto dim() const noexcept -> std::size_t { return box_min.size(); }

  void validate() const {
    if (box_min.size() < Point::min_dimension || box_max.size() != box_min.size()) {
      throw Error(ErrorCode::dimension_mismatch, "region box needs matching min/max with n >= 3");
    }
    for (std::size_t k = 0; k < dim(); ++k) {
      if (!(box_min[k] < box_max[k])) throw Error(ErrorCode::invalid_argument, "region box is empty");
    }
    for (const auto& b : balls) {
      if (b.center.dim() != dim()) throw Error(ErrorCode::dimension_mismatch, "ball center dimension");
      if (!(b.radius > 0.0)) throw Error(ErrorCode::invalid_argument, "exclusion radius must be positive");
    }
    for (const auto& s : slabs) {
      if (s.normal.size() != dim()) throw Error(ErrorCode::dimension_mismatch, "slab normal dimension");
      if (!(s.margin > 0.0)) throw Error(ErrorCode::invalid_argument, "slab margin must be positive");
    }
  }
};

inline auto box(std::size_t n, double lo, double hi) -> Region {
  Region r;
  r.box_min.assign(n, lo);
  r.box_max.assign(n, hi);
  return r;
}

/// Rejection reason names used in histograms.
namespace rejection {
inline const std::string ball = "excluded_ball";
inline const std::string slab = "excluded_slab";
inline const std::string window = "field_window";
inline const std::string lapse = "nonpositive_lapse";
}  // namespace rejection

struct SampleResult {
  std::vector<Point> points;
  std::size_t candidates = 0;
  std::map<std::string, std::size_t> rejections;
};

inline constexpr std::size_t oversampling_limit = 100;

/// Exactly `count` uniform points of the box satisfying all predicates. `lapse`, when given and the
/// region asks for it, must be positive (and evaluable) at every returned point.
inline auto sample_domain_detailed(const Region& region, std::size_t count, std::uint64_t seed,
                                   const ScalarField* lapse = nullptr) -> SampleResult {
  region.validate();
  SampleResult out;
  out.points.reserve(count);
  CounterRng rng(seed);
  const auto n = region.dim();
  const std::size_t limit = oversampling_limit * std::max<std::size_t>(count, 1);

  auto reject = [&](const Point& p) -> const std::string* {
    for (const auto& b : region.balls) {
      double r2 = 0.0;
      for (std::size_t k = 0; k < n; ++k) r2 += (p[k] - b.center[k]) * (p[k] - b.center[k]);
      if (r2 <= b.radius * b.radius) return &rejection::ball;
    }
    for (const auto& s : region.slabs) {
      double v = s.offset;
      for (std::size_t k = 0; k < n; ++k) v += s.normal[k] * p[k];
      if (std::abs(v) <= s.margin * (1.0 + p.norm())) return &rejection::slab;
    }
    for (const auto& w : region.windows) {
      try {
        const double v = w.field.eval(p).value();
        if (!(v >= w.lo && v <= w.hi)) return &rejection::window;
      } catch (const Error&) {
        return &rejection::window;
      }
    }
    if (lapse && region.require_positive_lapse) {
      try {
        if (!(lapse->eval(p).value() > 0.0)) return &rejection::lapse;
      } catch (const Error&) {
        return &rejection::lapse;
      }
    }
    return nullptr;
  };

  std::vector<double> c(n);
  while (out.points.size() < count) {
    if (out.candidates >= limit) {
      throw Error(ErrorCode::empty_region, "accepted " + std::to_string(out.points.size()) + " of " +
                                               std::to_string(count) + " points after " +
                                               std::to_string(out.candidates) + " draws");
    }
    ++out.candidates;
    for (std::size_t k = 0; k < n; ++k) c[k] = rng.uniform(region.box_min[k], region.box_max[k]);
    Point p(c);
    if (const auto* why = reject(p)) {
      ++out.rejections[*why];
    } else {
      out.points.push_back(std::move(p));
    }
  }
  return out;
}

inline auto sample_domain(const Region& region, std::size_t count, std::uint64_t seed,
                          const ScalarField* lapse = nullptr) -> std::vector<Point> {
  return sample_domain_detailed(region, count, seed, lapse).points;
}

// ---------------------------------------------------------------------------------------------
// aggregation

/// Defaults: 1e-8, except 1e-7 for the tensor-component channels.
inline auto default_tolerance(Channel c) noexcept -> double {
  switch (c) {
    case Channel::hessian_max:
    case Channel::t1_offdiag:
    case Channel::t1_diag: return 1e-7;
    default: return 1e-8;
  }
}

struct Tolerances {
  std::array<double, all_channels.size()> values{};
  Tolerances() {
    for (auto c : all_channels) values[static_cast<std::size_t>(c)] = default_tolerance(c);
  }
  static auto uniform(double tol) -> Tolerances {
    Tolerances t;
    t.values.fill(tol);
    return t;
  }
  auto operator[](Channel c) const -> double { return values[static_cast<std::size_t>(c)]; }
  auto operator[](Channel c) -> double& { return values[static_cast<std::size_t>(c)]; }
};

struct ChannelStats {
  double max = 0.0;
  double mean = 0.0;
  double p95 = 0.0;
  double tolerance = 0.0;
  auto pass() const noexcept -> bool { return max <= tolerance; }
};

/// max, mean and nearest-rank p95 of `v`. The values are sorted first, so the result does not depend on
/// their order; the mean uses Neumaier summation.
inline auto summarize(std::vector<double> v) -> ChannelStats {
  ChannelStats s;
  if (v.empty()) return s;
  std::sort(v.begin(), v.end());
  s.max = v.back();
  double sum = 0.0, comp = 0.0;
  for (double x : v) {
    const double t = sum + x;
    comp += std::abs(sum) >= std::abs(x) ? (sum - t) + x : (x - t) + sum;
    sum = t;
  }
  s.mean = (sum + comp) / static_cast<double>(v.size());
  const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(v.size())));
  s.p95 = v[std::max<std::size_t>(rank, 1) - 1];
  return s;
}

struct VerifyOptions {
  /// 0 reads ELECTROVAC_THREADS (0 or unset = hardware concurrency).
  unsigned threads = 0;
  double failure_budget = 0.01;
  bool keep_points = false;
};

inline auto thread_count(unsigned requested = 0) -> unsigned {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("ELECTROVAC_THREADS")) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(std::min<unsigned long>(v, 1024));
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

struct ResidualReport {
  std::uint64_t seed = 0;
  std::size_t dim = 0;
  std::array<ChannelStats, all_channels.size()> channels{};
  std::size_t points_requested = 0;
  std::size_t points_accepted = 0;
  /// Evaluation failures per error name; requested = accepted + sum.
  std::map<std::string, std::size_t> rejections;
  /// Sampling diagnostics: candidate draws and per-predicate rejections.
  std::size_t candidates_drawn = 0;
  std::map<std::string, std::size_t> sampling_rejections;
  bool verdict = false;
  /// Filled when VerifyOptions::keep_points is set; successful points only.
  std::vector<Point> points;
  std::vector<ResidualVector> residuals;

  auto operator[](Channel c) const -> const ChannelStats& { return channels[static_cast<std::size_t>(c)]; }
};

inline auto verify(const SystemInstance& sys, const Region& region, std::size_t count, std::uint64_t seed,
                   const Tolerances& tol = {}, const VerifyOptions& opt = {}) -> ResidualReport {
  if (region.dim() != sys.n) throw Error(ErrorCode::dimension_mismatch, "region and system dimensions differ");
  if (count == 0) throw Error(ErrorCode::invalid_argument, "need at least one point");
  auto sample = sample_domain_detailed(region, count, seed, &sys.lapse);
  const auto& pts = sample.points;

  std::vector<std::optional<ResidualVector>> results(pts.size());
  std::vector<std::string> failures(pts.size());
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      try {
        results[i] = evaluate_residuals(sys, pts[i]);
      } catch (const Error& e) {
        failures[i] = std::string(to_string(e.code()));
      }
    }
  };
  const auto threads = std::min<std::size_t>(thread_count(opt.threads), pts.size());
  if (threads <= 1) {
    work(0, pts.size());
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (pts.size() + threads - 1) / threads;
    for (std::size_t t = 0; t < threads; ++t) {
      const std::size_t b = t * chunk, e = std::min(pts.size(), b + chunk);
      if (b < e) pool.emplace_back(work, b, e);
    }
    for (auto& th : pool) th.join();
  }

  ResidualReport rep;
  rep.seed = seed;
  rep.dim = sys.n;
  rep.points_requested = count;
  rep.candidates_drawn = sample.candidates;
  rep.sampling_rejections = std::move(sample.rejections);
  std::array<std::vector<double>, all_channels.size()> per_channel;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (!results[i]) {
      ++rep.rejections[failures[i]];
      continue;
    }
    ++rep.points_accepted;
    for (auto c : all_channels) per_channel[static_cast<std::size_t>(c)].push_back((*results[i])[c].normalized);
    if (opt.keep_points) {
      rep.points.push_back(pts[i]);
      rep.residuals.push_back(*results[i]);
    }
  }
  const std::size_t failed = count - rep.points_accepted;
  if (static_cast<double>(failed) > opt.failure_budget * static_cast<double>(count)) {
    throw Error(ErrorCode::failure_budget_exceeded,
                std::to_string(failed) + " of " + std::to_string(count) + " point evaluations failed");
  }
  rep.verdict = true;
  for (auto c : all_channels) {
    const auto i = static_cast<std::size_t>(c);
    rep.channels[i] = summarize(std::move(per_channel[i]));
    rep.channels[i].tolerance = tol[c];
    rep.verdict = rep.verdict && rep.channels[i].pass();
  }
  return rep;
}

// ---------------------------------------------------------------------------------------------
// output

inline constexpr int report_schema_version = 1;

inline auto region_to_json(const Region& r) -> nlohmann::json {
  nlohmann::json j;
  j["box_min"] = r.box_min;
  j["box_max"] = r.box_max;
  j["balls"] = nlohmann::json::array();
  for (const auto& b : r.balls) {
    const auto c = b.center.coords();
    j["balls"].push_back({{"center", std::vector<double>(c.begin(), c.end())}, {"radius", b.radius}});
  }
  j["slabs"] = nlohmann::json::array();
  for (const auto& s : r.slabs) j["slabs"].push_back({{"normal", s.normal}, {"offset", s.offset}, {"margin", s.margin}});
  j["windows"] = nlohmann::json::array();
  for (const auto& w : r.windows) j["windows"].push_back({{"name", w.name}, {"lo", w.lo}, {"hi", w.hi}});
  j["require_positive_lapse"] = r.require_positive_lapse;
  return j;
}

/// Report JSON; `solution` and `region` are descriptors supplied by the caller.
inline auto report_to_json(const ResidualReport& rep, const nlohmann::json& solution, const nlohmann::json& region,
                           const std::string& timestamp) -> nlohmann::json {
  nlohmann::json j;
  j["schema_version"] = report_schema_version;
  j["solution"] = solution;
  j["region"] = region;
  j["seed"] = rep.seed;
  nlohmann::json ch = nlohmann::json::object();
  for (auto c : all_channels) {
    const auto& s = rep[c];
    ch[std::string(channel_name(c))] = {{"max", s.max}, {"mean", s.mean}, {"p95", s.p95}, {"tolerance", s.tolerance}};
  }
  j["channels"] = ch;
  j["points"] = {{"requested", rep.points_requested},
                 {"accepted", rep.points_accepted},
                 {"rejections", rep.rejections},
                 {"candidates_drawn", rep.candidates_drawn},
                 {"sampling_rejections", rep.sampling_rejections}};
  j["verdict"] = rep.verdict ? "pass" : "fail";
  j["timestamp"] = timestamp;
  return j;
}

inline void write_points_csv(std::ostream& os, const ResidualReport& rep) {
  for (std::size_t k = 0; k < rep.dim; ++k) os << 'x' << (k + 1) << ',';
  for (std::size_t i = 0; i < all_channels.size(); ++i) os << (i ? "," : "") << channel_name(all_channels[i]);
  os << '\n' << std::setprecision(17);
  for (std::size_t r = 0; r < rep.points.size(); ++r) {
    for (std::size_t k = 0; k < rep.dim; ++k) os << rep.points[r][k] << ',';
    for (std::size_t i = 0; i < all_channels.size(); ++i) {
      os << (i ? "," : "") << rep.residuals[r][all_channels[i]].normalized;
    }
    os << '\n';
  }
}

}  // namespace electrovac
