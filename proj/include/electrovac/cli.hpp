// SPDX-License-Identifier: MIT
/**
    \file
    \brief command-line front end: JSON run configs, subcommands, exit codes

    Subcommands verify, reduce, separability and bounds each read one JSON
    config. Exit codes: 0 pass, 1 fail (including numerical failures of a run),
    2 usage or configuration error. Machine output goes to files or stdout, an
    error object to stderr, and human-readable notes to stderr.

    Configs are checked key by key; unknown keys are rejected. Every report
    embeds the resolved config (defaults filled in, command-line overrides
    applied), and running that config again reproduces the report.
*/

#pragma once

#include <electrovac/error.hpp>
#include <electrovac/field.hpp>
#include <electrovac/harness.hpp>
#include <electrovac/invariants.hpp>
#include <electrovac/reduction.hpp>
#include <electrovac/residuals.hpp>
#include <electrovac/solutions.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace electrovac::cli {

using nlohmann::json;

inline constexpr int exit_pass = 0;
inline constexpr int exit_fail = 1;
inline constexpr int exit_usage = 2;

/// Input-shaped errors map to 2; failures of the computation itself to 1.
inline auto exit_code_for(ErrorCode code) noexcept -> int {
  switch (code) {
    case ErrorCode::config_error:
    case ErrorCode::invalid_argument:
    case ErrorCode::dimension_mismatch:
    case ErrorCode::coincident_centers:
    case ErrorCode::zero_slope:
    case ErrorCode::degenerate_discriminant:
    case ErrorCode::empty_region: return exit_usage;
    default: return exit_fail;
  }
}

inline auto utc_timestamp() -> std::string {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// ---------------------------------------------------------------------------------------------
// strict object reader

/// Reads keys of one JSON object, copies every value it hands out (defaults included) into
/// `resolved`, and rejects keys nobody asked for in finish().
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail("expected an object");
  }

  [[noreturn]] void fail(const std::string& what) const { throw Error(ErrorCode::config_error, path_ + ": " + what); }

  auto has(const std::string& key) const -> bool { return j_.contains(key); }

  auto raw(const std::string& key) -> const json& {
    if (!j_.contains(key)) fail("missing key '" + key + "'");
    seen_.insert(key);
    resolved[key] = j_.at(key);
    return j_.at(key);
  }

  auto number(const std::string& key) -> double {
    const auto& v = raw(key);
    if (!v.is_number()) fail("'" + key + "' must be a number");
    return v.get<double>();
  }
  auto number(const std::string& key, double fallback) -> double {
    if (!has(key)) {
      seen_.insert(key);
      resolved[key] = fallback;
      return fallback;
    }
    return number(key);
  }

  auto count(const std::string& key) -> std::uint64_t {
    const auto& v = raw(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
      fail("'" + key + "' must be a non-negative integer");
    }
    return v.get<std::uint64_t>();
  }
  auto count(const std::string& key, std::uint64_t fallback) -> std::uint64_t {
    if (!has(key)) {
      seen_.insert(key);
      resolved[key] = fallback;
      return fallback;
    }
    return count(key);
  }

  auto sign(const std::string& key) -> int {
    const auto s = has(key) ? count_signed(key) : (seen_.insert(key), resolved[key] = 1, 1);
    if (s != 1 && s != -1) fail("'" + key + "' must be +1 or -1");
    return static_cast<int>(s);
  }

  auto boolean(const std::string& key, bool fallback) -> bool {
    if (!has(key)) {
      seen_.insert(key);
      resolved[key] = fallback;
      return fallback;
    }
    const auto& v = raw(key);
    if (!v.is_boolean()) fail("'" + key + "' must be true or false");
    return v.get<bool>();
  }

  auto text(const std::string& key) -> std::string {
    const auto& v = raw(key);
    if (!v.is_string()) fail("'" + key + "' must be a string");
    return v.get<std::string>();
  }
  auto optional_text(const std::string& key) -> std::optional<std::string> {
    if (!has(key)) return std::nullopt;
    return text(key);
  }

  auto vector(const std::string& key) -> std::vector<double> {
    const auto& v = raw(key);
    return as_vector(v, key);
  }

  auto points(const std::string& key) -> std::vector<Point> {
    const auto& v = raw(key);
    if (!v.is_array()) fail("'" + key + "' must be an array of coordinate arrays");
    std::vector<Point> out;
    for (const auto& c : v) out.emplace_back(as_vector(c, key));
    return out;
  }

  auto child(const std::string& key) -> Section {
    seen_.insert(key);
    if (!has(key)) fail("missing section '" + key + "'");
    return Section(j_.at(key), path_ + "." + key);
  }

  /// Stores a child's resolved object back under `key`.
  void put(const std::string& key, json value) { resolved[key] = std::move(value); }
  /// A command-line override: replaces whatever the config says.
  void set(const std::string& key, json value) {
    seen_.insert(key);
    resolved[key] = std::move(value);
  }

  void finish() const {
    for (const auto& [key, _] : j_.items()) {
      if (!seen_.count(key)) fail("unknown key '" + key + "'");
    }
  }

  auto path() const -> const std::string& { return path_; }

  json resolved = json::object();

 private:
  auto count_signed(const std::string& key) -> std::int64_t {
    const auto& v = raw(key);
    if (!v.is_number_integer()) fail("'" + key + "' must be an integer");
    return v.get<std::int64_t>();
  }
  auto as_vector(const json& v, const std::string& key) const -> std::vector<double> {
    if (!v.is_array()) fail("'" + key + "' must be an array of numbers");
    std::vector<double> out;
    for (const auto& x : v) {
      if (!x.is_number()) fail("'" + key + "' must be an array of numbers");
      out.push_back(x.get<double>());
    }
    return out;
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

// ---------------------------------------------------------------------------------------------
// solution, region, invariants and field expressions

struct ParsedSolution {
  SolutionSpec spec;
  json resolved;
};

inline auto parse_solution(Section s) -> ParsedSolution {
  ParsedSolution out;
  const auto family = s.text("family");
  const auto n = static_cast<std::size_t>(s.count("n"));
  if (family == "minkowski") {
    out.spec.family = MinkowskiParams{n};
  } else if (family == "multicenter") {
    MultiCenterParams p;
    p.n = n;
    p.centers = s.points("centers");
    p.weights = s.vector("weights");
    p.k = s.number("k", 1.0);
    p.k1 = s.number("k1", -1.0);
    p.sign = s.sign("sign");
    p.center_eps = s.number("center_eps", default_center_eps);
    out.spec.family = p;
  } else if (family == "dilation") {
    DilationParams p;
    p.n = n;
    p.a = s.vector("a");
    p.b = s.vector("b");
    p.k = s.number("k", 1.0);
    p.k1 = s.number("k1", 0.0);
    p.sign = s.sign("sign");
    out.spec.family = p;
  } else {
    s.fail("unknown family '" + family + "' (minkowski, multicenter, dilation)");
  }
  out.spec.cosmological_constant = s.number("cosmological_constant", 0.0);
  out.spec.lapse_perturbation = s.number("lapse_perturbation", 0.0);
  s.finish();
  out.resolved = s.resolved;
  return out;
}

struct ParsedRegion {
  Region region;
  json resolved;
};

/// Box, exclusion balls and slabs. `center_radius` excludes balls around multi-centre poles and
/// `singular_margin` a slab around P(x) = 0 for dilation solutions.
inline auto parse_region(Section s, const SolutionSpec& sol) -> ParsedRegion {
  ParsedRegion out;
  auto& r = out.region;
  const auto n = solution_dim(sol.family);
  if (s.has("box")) {
    const auto b = s.vector("box");
    if (b.size() != 2) s.fail("'box' must be [lo, hi]");
    r.box_min.assign(n, b[0]);
    r.box_max.assign(n, b[1]);
    if (s.has("box_min") || s.has("box_max")) s.fail("give either 'box' or 'box_min'/'box_max'");
  } else {
    r.box_min = s.vector("box_min");
    r.box_max = s.vector("box_max");
  }
  if (r.box_min.size() != n || r.box_max.size() != n) s.fail("box dimension differs from the solution's n");
  if (s.has("balls")) {
    const auto& balls = s.raw("balls");
    if (!balls.is_array()) s.fail("'balls' must be an array");
    for (std::size_t i = 0; i < balls.size(); ++i) {
      Section b(balls[i], s.path() + ".balls[" + std::to_string(i) + "]");
      r.balls.push_back({Point(b.vector("center")), b.number("radius")});
      b.finish();
    }
  }
  if (s.has("slabs")) {
    const auto& slabs = s.raw("slabs");
    if (!slabs.is_array()) s.fail("'slabs' must be an array");
    for (std::size_t i = 0; i < slabs.size(); ++i) {
      Section b(slabs[i], s.path() + ".slabs[" + std::to_string(i) + "]");
      r.slabs.push_back({b.vector("normal"), b.number("offset", 0.0), b.number("margin", 1e-6)});
      b.finish();
    }
  }
  if (const auto* mc = std::get_if<MultiCenterParams>(&sol.family)) {
    const double radius = s.number("center_radius", 0.01);
    for (const auto& c : mc->centers) r.balls.push_back({c, radius});
  }
  if (const auto* d = std::get_if<DilationParams>(&sol.family)) {
    const double margin = s.number("singular_margin", 0.01);
    std::vector<double> normal(n, 0.0);
    for (std::size_t j = 0; j < d->b.size() && j < n; ++j) normal[j] = d->b[j];
    r.slabs.push_back({normal, 0.0, margin});
  }
  r.require_positive_lapse = s.boolean("require_positive_lapse", true);
  s.finish();
  out.resolved = s.resolved;
  return out;
}

inline auto parse_invariant(Section s) -> AnyInvariant {
  const auto kind = s.text("kind");
  std::optional<AnyInvariant> inv;
  if (kind == "quadric") {
    const double tau = s.number("tau");
    inv = QuadricInvariant(tau, s.vector("gamma"), s.vector("theta"));
  } else if (kind == "dilation") {
    const auto n = static_cast<std::size_t>(s.count("n"));
    inv = DilationInvariant(n, s.vector("a"), s.vector("b"));
  } else if (kind == "poles") {
    auto centers = s.points("centers");
    inv = HarmonicPoleInvariant(std::move(centers), s.vector("weights"));
  } else {
    s.fail("unknown invariant kind '" + kind + "' (quadric, dilation, poles)");
  }
  s.finish();
  return *inv;
}

/// Field expressions: a number, "x1".."xn", {"invariant": {...}} or {"op": name, "args": [...]} with
/// add, mul (any arity), sub, div (two), neg, exp, log, sqrt, atan (one), pow ([expr, number]).
inline auto parse_field(const json& e, std::size_t n, const std::string& path) -> ScalarField {
  auto fail = [&](const std::string& what) -> ScalarField { throw Error(ErrorCode::config_error, path + ": " + what); };
  if (e.is_number()) return fields::constant(e.get<double>());
  if (e.is_string()) {
    const auto s = e.get<std::string>();
    if (s.size() >= 2 && s[0] == 'x') {
      std::size_t pos = 0;
      unsigned long k = 0;
      try {
        k = std::stoul(s.substr(1), &pos);
      } catch (const std::exception&) {
        pos = 0;
      }
      if (pos + 1 == s.size() && k >= 1 && k <= n) return fields::coordinate(k - 1);
    }
    return fail("unknown variable '" + s + "' (x1..x" + std::to_string(n) + ")");
  }
  if (!e.is_object()) return fail("expected a number, a variable name or an object");
  if (e.contains("invariant")) {
    if (e.size() != 1) return fail("an invariant node takes no other keys");
    const auto inv = parse_invariant(Section(e.at("invariant"), path + ".invariant"));
    if (invariant_dim(inv) != n) return fail("invariant dimension differs from n");
    return invariant_field(inv);
  }
  Section s(e, path);
  const auto op = s.text("op");
  const auto& args = s.raw("args");
  s.finish();
  if (!args.is_array() || args.empty()) return fail("'args' must be a nonempty array");
  std::vector<ScalarField> a;
  auto arg = [&](std::size_t i) { return parse_field(args[i], n, path + ".args[" + std::to_string(i) + "]"); };
  auto arity = [&](std::size_t k) {
    if (args.size() != k) fail("'" + op + "' takes " + std::to_string(k) + " argument(s)");
  };
  if (op == "add" || op == "mul") {
    ScalarField acc = arg(0);
    for (std::size_t i = 1; i < args.size(); ++i) acc = op == "add" ? acc + arg(i) : acc * arg(i);
    return acc;
  }
  if (op == "sub") return arity(2), arg(0) - arg(1);
  if (op == "div") return arity(2), arg(0) / arg(1);
  if (op == "neg") return arity(1), -arg(0);
  if (op == "exp") return arity(1), fields::exp(arg(0));
  if (op == "log") return arity(1), fields::log(arg(0));
  if (op == "sqrt") return arity(1), fields::sqrt(arg(0));
  if (op == "atan") return arity(1), fields::atan(arg(0));
  if (op == "pow") {
    arity(2);
    if (!args[1].is_number()) return fail("pow exponent must be a number");
    return fields::pow(arg(0), args[1].get<double>());
  }
  return fail("unknown op '" + op + "'");
}

// ---------------------------------------------------------------------------------------------
// options and output

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> points;
  std::optional<std::string> out;
  std::optional<std::string> csv;
  std::vector<std::string> tolerances;  ///< CHANNEL=VALUE
};

inline auto read_config(const std::string& path) -> json {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::config_error, "cannot read config '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::config_error, std::string("malformed JSON: ") + e.what());
  }
}

struct Outputs {
  std::optional<std::string> report;
  std::optional<std::string> csv;
};

/// Reads the "output" section and applies --out / --csv.
inline auto parse_outputs(Section& top, const Overrides& ov) -> Outputs {
  Outputs o;
  if (top.has("output")) {
    auto s = top.child("output");
    o.report = s.optional_text("report");
    o.csv = s.optional_text("csv");
    s.finish();
  }
  if (ov.out) o.report = ov.out;
  if (ov.csv) o.csv = ov.csv;
  json r = json::object();
  if (o.report) r["report"] = *o.report;
  if (o.csv) r["csv"] = *o.csv;
  top.put("output", r);
  return o;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::config_error, "cannot write '" + path + "'");
  f << text;
}

inline void emit(const json& report, const Outputs& o, std::ostream& out) {
  const auto text = report.dump(2) + "\n";
  if (o.report) {
    write_text(*o.report, text);
  } else {
    out << text;
  }
}

inline auto parse_tolerance_override(const std::string& s) -> std::pair<Channel, double> {
  const auto eq = s.find('=');
  if (eq == std::string::npos) throw Error(ErrorCode::config_error, "--tolerance expects CHANNEL=VALUE, got '" + s + "'");
  double v = 0.0;
  try {
    std::size_t pos = 0;
    v = std::stod(s.substr(eq + 1), &pos);
    if (pos != s.size() - eq - 1) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    throw Error(ErrorCode::config_error, "bad tolerance value in '" + s + "'");
  }
  if (!(v >= 0.0)) throw Error(ErrorCode::config_error, "tolerance must be non-negative in '" + s + "'");
  try {
    return {channel_from_name(s.substr(0, eq)), v};
  } catch (const Error& e) {
    throw Error(ErrorCode::config_error, e.what());
  }
}

// ---------------------------------------------------------------------------------------------
// commands; each returns an exit code and throws Error on failure

inline auto cmd_verify(const json& config, const Overrides& ov, std::ostream& out, std::ostream& err) -> int {
  Section top(config, "config");
  auto sol = parse_solution(top.child("solution"));
  top.put("solution", sol.resolved);
  auto reg = parse_region(top.child("region"), sol.spec);
  top.put("region", reg.resolved);
  const auto points = ov.points ? (top.set("points", *ov.points), *ov.points) : top.count("points", 1000);
  const auto seed = ov.seed ? (top.set("seed", *ov.seed), *ov.seed) : top.count("seed", 0);
  Tolerances tol;
  if (top.has("tolerances")) {
    auto s = top.child("tolerances");
    for (auto c : all_channels) tol[c] = s.number(std::string(channel_name(c)), default_tolerance(c));
    s.finish();
  }
  for (const auto& t : ov.tolerances) {
    const auto [c, v] = parse_tolerance_override(t);
    tol[c] = v;
  }
  json tj = json::object();
  for (auto c : all_channels) tj[std::string(channel_name(c))] = tol[c];
  top.put("tolerances", tj);
  const auto outputs = parse_outputs(top, ov);
  top.finish();
  if (points == 0) throw Error(ErrorCode::config_error, "points must be positive");

  const auto sys = build_solution(sol.spec);
  VerifyOptions vo;
  vo.keep_points = outputs.csv.has_value();
  const auto rep = verify(sys, reg.region, points, seed, tol, vo);
  auto j = report_to_json(rep, sol.resolved, region_to_json(reg.region), utc_timestamp());
  j["config"] = top.resolved;
  emit(j, outputs, out);
  if (outputs.csv) {
    std::ostringstream csv;
    write_points_csv(csv, rep);
    write_text(*outputs.csv, csv.str());
  }
  err << "verify: " << family_name(sol.spec.family) << ", " << rep.points_accepted << "/" << rep.points_requested
      << " points, verdict " << (rep.verdict ? "pass" : "fail") << "\n";
  return rep.verdict ? exit_pass : exit_fail;
}

inline auto state_to_json(const QuadricODEState& s) -> json {
  return {{"xi", s.xi}, {"phi", s.phi}, {"dphi", s.dphi}, {"N", s.N}, {"dN", s.dN}, {"psi", s.psi}, {"dpsi", s.dpsi}};
}

inline auto cmd_reduce(const json& config, const Overrides& ov, std::ostream& out, std::ostream& err) -> int {
  Section top(config, "config");
  auto r = top.child("reduce");
  const auto mode = r.text("mode");
  json report = {{"schema_version", report_schema_version}, {"mode", mode}};
  std::string csv_text;
  bool pass = false;
  auto finish_sections = [&] {
    r.finish();
    top.put("reduce", r.resolved);
  };

  if (mode == "lapse") {
    const auto inv = parse_invariant(r.child("invariant"));
    r.put("invariant", config.at("reduce").at("invariant"));
    const double k = r.number("k", 1.0), k1 = r.number("k1", 0.0);
    LapseSolveOptions lo;
    lo.xi_begin = r.number("xi_begin");
    lo.xi_end = r.number("xi_end");
    lo.intervals = r.count("intervals", lo.intervals);
    lo.interpolation_tol = r.number("interpolation_tol", lo.interpolation_tol);
    finish_sections();
    const auto outputs = parse_outputs(top, ov);
    top.finish();
    const auto sol = solve_lapse_from_invariant(inv, k, k1, lo);
    report["nodes"] = sol.profile->nodes().size();
    report["xi_begin"] = lo.xi_begin;
    report["xi_end"] = lo.xi_end;
    report["closed_form"] = static_cast<bool>(sol.closed_form);
    if (sol.closed_form) {
      report["closed_form_max_deviation"] = sol.closed_form_max_deviation;
      report["weight_path_max_deviation"] = sol.weight_path_max_deviation;
    }
    pass = true;  // closed-form disagreement already threw
    std::ostringstream csv;
    write_profile_csv(csv, sol);
    csv_text = csv.str();
    report["verdict"] = "pass";
    report["config"] = top.resolved;
    emit(report, outputs, out);
    if (outputs.csv) write_text(*outputs.csv, csv_text);
  } else if (mode == "quadric") {
    QuadricParams P;
    const double tau = r.number("tau");
    const auto gamma = r.vector("gamma");
    const auto theta = r.vector("theta");
    const QuadricInvariant inv(tau, gamma, theta);
    P = quadric_params(inv, r.number("cosmological_constant", 0.0));
    auto is = r.child("initial");
    QuadricODEState s0;
    s0.xi = is.number("xi");
    if (is.has("U")) {
      // MP data from U = 1/N and U'
      const double U = is.number("U"), dU = is.number("dU");
      const int sign = is.sign("sign");
      const double nd = static_cast<double>(P.n), c = mp_potential_coefficient(P.n);
      s0.N = 1.0 / U;
      s0.dN = -dU / (U * U);
      s0.phi = std::pow(s0.N, 1.0 / (nd - 2.0));
      s0.dphi = s0.phi * s0.dN / ((nd - 2.0) * s0.N);
      s0.psi = sign * c * (1.0 - s0.N);
      s0.dpsi = -sign * c * s0.dN;
    } else {
      s0.phi = is.number("phi");
      s0.dphi = is.number("dphi");
      s0.N = is.number("N");
      s0.dN = is.number("dN");
      s0.psi = is.number("psi", 0.0);
      if (is.has("dpsi")) {
        s0.dpsi = is.number("dpsi");
      } else {
        s0.dpsi = solve_constraint_for_dpsi(P, s0, is.sign("dpsi_sign"));
      }
    }
    is.finish();
    r.put("initial", is.resolved);
    const double xi_end = r.number("xi_end");
    QuadricIntegrationOptions io;
    io.rel_tol = r.number("rel_tol", io.rel_tol);
    io.abs_tol = r.number("abs_tol", io.abs_tol);
    io.drift_tol = r.number("drift_tol", io.drift_tol);
    io.max_step = r.number("max_step", io.max_step);
    const double constraint_tol = r.number("constraint_tol", 1e-8);
    finish_sections();
    const auto outputs = parse_outputs(top, ov);
    top.finish();
    const auto traj = integrate_quadric_system(P, s0, xi_end, io);
    pass = traj.max_constraint <= constraint_tol;
    report["n"] = P.n;
    report["beta"] = P.beta;
    report["steps"] = traj.states.size() - 1;
    report["rejected_steps"] = traj.rejected_steps;
    report["max_constraint"] = traj.max_constraint;
    report["constraint_tol"] = constraint_tol;
    report["initial"] = state_to_json(traj.states.front());
    report["final"] = state_to_json(traj.states.back());
    report["verdict"] = pass ? "pass" : "fail";
    report["config"] = top.resolved;
    std::ostringstream csv;
    write_trajectory_csv(csv, traj);
    emit(report, outputs, out);
    if (outputs.csv) write_text(*outputs.csv, csv.str());
  } else {
    r.fail("unknown mode '" + mode + "' (lapse, quadric)");
  }
  err << "reduce: " << mode << ", verdict " << (pass ? "pass" : "fail") << "\n";
  return pass ? exit_pass : exit_fail;
}

inline auto cmd_separability(const json& config, const Overrides& ov, std::ostream& out, std::ostream& err) -> int {
  Section top(config, "config");
  auto s = top.child("separability");
  const auto n = static_cast<std::size_t>(s.count("n"));
  if (n < Point::min_dimension) s.fail("n must be at least 3");
  const auto field = parse_field(s.raw("field"), n, s.path() + ".field");
  const auto levels = s.vector("levels");
  const auto samples = s.count("samples_per_level", 20);
  SeparabilityOptions so;
  so.box_min = s.vector("box_min");
  so.box_max = s.vector("box_max");
  so.tol_sep = s.number("tol_sep", so.tol_sep);
  so.eps_grad = s.number("eps_grad", so.eps_grad);
  so.root_tol = s.number("root_tol", so.root_tol);
  so.ray_steps = s.count("ray_steps", so.ray_steps);
  s.finish();
  top.put("separability", s.resolved);
  const auto seed = ov.seed ? (top.set("seed", *ov.seed), *ov.seed) : top.count("seed", 0);
  const auto outputs = parse_outputs(top, ov);
  top.finish();
  if (so.box_min.size() != n || so.box_max.size() != n) {
    throw Error(ErrorCode::config_error, "separability box dimension differs from n");
  }

  const auto rep = separability_check(field, levels, samples, seed, so);
  json lv = json::array();
  for (const auto& l : rep.levels) {
    lv.push_back({{"level", l.level},
                  {"samples", l.samples},
                  {"degenerate", l.degenerate},
                  {"ratio_min", l.ratio_min},
                  {"ratio_max", l.ratio_max},
                  {"spread", l.ratio_spread},
                  {"hessian_ratio_spread", std::isnan(l.hessian_ratio_spread) ? json(nullptr) : json(l.hessian_ratio_spread)},
                  {"separable", l.separable}});
  }
  const json report = {{"schema_version", report_schema_version},
                       {"verdict", rep.separable ? "separable" : "non-separable"},
                       {"levels", lv},
                       {"config", top.resolved}};
  emit(report, outputs, out);
  err << "separability: " << (rep.separable ? "separable" : "non-separable") << "\n";
  return rep.separable ? exit_pass : exit_fail;
}

inline auto cmd_bounds(const json& config, const Overrides& ov, std::ostream& out, std::ostream& err) -> int {
  Section top(config, "config");
  auto sol = parse_solution(top.child("solution"));
  top.put("solution", sol.resolved);
  const auto outputs = parse_outputs(top, ov);
  top.finish();
  const auto* d = std::get_if<DilationParams>(&sol.spec.family);
  if (!d) throw Error(ErrorCode::config_error, "bounds need a dilation solution");
  const DilationMP mp(*d);
  const auto b = mp.bounds();
  json report = {{"schema_version", report_schema_version},
                 {"A", b.A},
                 {"B", b.B},
                 {"sqrt_discriminant", mp.profile()->sqrt_discriminant()},
                 {"config", top.resolved}};
  int code = exit_pass;
  if (b.lower() > 0.0) {
    const auto c = mp.uniform_equivalence();
    report["uniform_equivalence"] = {{"c1", c.c1}, {"c2", c.c2}};
  } else {
    report["uniform_equivalence"] = nullptr;
    code = exit_fail;
  }
  emit(report, outputs, out);
  err << "bounds: A = " << b.A << ", B = " << b.B
      << (code == exit_pass ? "" : " (lower bound not positive; no uniform equivalence)") << "\n";
  return code;
}

// ---------------------------------------------------------------------------------------------
// entry point

inline void print_error(std::ostream& err, const std::string& code, const std::string& message) {
  err << json{{"error", code}, {"message", message}}.dump() << "\n";
}

/// `args` excludes the program name.
inline auto run(std::vector<std::string> args, std::ostream& out, std::ostream& err) -> int {
  CLI::App app{"electrovac: verify and construct static electrovacuum solutions", "electrovac"};
  app.require_subcommand(1);
  Overrides ov;
  std::optional<std::uint64_t> seed, points;
  std::optional<std::string> out_path, csv_path;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", ov.config_path, "JSON run config")->required();
    sub->add_option("--seed", seed, "override the sampling seed");
    sub->add_option("--out", out_path, "report path (default stdout)");
    sub->add_option("--csv", csv_path, "CSV export path");
  };
  auto* verify_cmd = app.add_subcommand("verify", "residual verification of a solution family");
  add_common(verify_cmd);
  verify_cmd->add_option("--points", points, "override the number of sample points");
  verify_cmd->add_option("--tolerance", ov.tolerances, "per-channel tolerance, CHANNEL=VALUE (repeatable)");
  auto* reduce_cmd = app.add_subcommand("reduce", "integrate a reduced ODE and export the profile");
  add_common(reduce_cmd);
  auto* sep_cmd = app.add_subcommand("separability", "check that Delta xi / |grad xi|^2 depends on xi only");
  add_common(sep_cmd);
  auto* bounds_cmd = app.add_subcommand("bounds", "lapse bounds and uniform equivalence of a dilation solution");
  add_common(bounds_cmd);

  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return exit_pass;
  } catch (const CLI::ParseError& e) {
    print_error(err, "UsageError", e.what());
    return exit_usage;
  }
  ov.seed = seed;
  ov.points = points;
  ov.out = out_path;
  ov.csv = csv_path;

  try {
    const auto config = read_config(ov.config_path);
    if (verify_cmd->parsed()) return cmd_verify(config, ov, out, err);
    if (reduce_cmd->parsed()) return cmd_reduce(config, ov, out, err);
    if (sep_cmd->parsed()) return cmd_separability(config, ov, out, err);
    return cmd_bounds(config, ov, out, err);
  } catch (const Error& e) {
    print_error(err, std::string(to_string(e.code())), e.what());
    return exit_code_for(e.code());
  } catch (const json::exception& e) {
    print_error(err, "ConfigError", e.what());
    return exit_usage;
  }
}

}  // namespace electrovac::cli
