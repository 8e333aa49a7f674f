#pragma once

// Declarative experiment runner behind tools/aniso_cli.

#include "aniso/besov.hpp"
#include "aniso/muckenhoupt.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace aniso::cli {

using json = nlohmann::json;

inline constexpr const char* kToolVersion = "aniso 1.0.0";

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

// Fixed 12 significant digits; the report must not depend on stream state.
inline std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os << std::setprecision(12) << v;
  return os.str();
}

inline std::string vec_str(const Vec& v) {
  std::string s;
  for (int i = 0; i < v.size(); ++i) s += (i ? " " : "") + num(v(i));
  return s;
}

inline Error config_error(const std::string& path, const std::string& what) {
  return Error(ErrorCode::ConfigInvalid, (path.empty() ? "/" : path) + ": " + what);
}

// JSON object reader: every key read is recorded and finish() rejects the rest.
class Obj {
 public:
  Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw config_error(path_, "expected an object");
  }

  const std::string& path() const { return path_; }
  std::string child(const std::string& key) const { return path_ + "/" + key; }
  bool has(const std::string& key) const { return j_.contains(key); }

  const json& raw(const std::string& key) {
    if (!has(key)) throw config_error(child(key), "missing required key");
    seen_.insert(key);
    return j_.at(key);
  }

  double number(const std::string& key) { return as_number(raw(key), child(key)); }
  double number(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }
  int integer(const std::string& key) { return as_integer(raw(key), child(key)); }
  int integer(const std::string& key, int fallback) { return has(key) ? integer(key) : fallback; }
  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_boolean()) throw config_error(child(key), "expected true or false");
    return v.get<bool>();
  }
  std::string text(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_string()) throw config_error(child(key), "expected a string");
    return v.get<std::string>();
  }
  std::string text(const std::string& key, const std::string& fallback) { return has(key) ? text(key) : fallback; }
  std::vector<double> numbers(const std::string& key, std::vector<double> fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_array() || v.empty()) throw config_error(child(key), "expected a nonempty list of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_number(v[i], child(key) + "/" + std::to_string(i)));
    return out;
  }
  Mat matrix(const std::string& key) {
    const json& v = raw(key);
    const std::string p = child(key);
    if (!v.is_array() || v.empty()) throw config_error(p, "expected a list of rows");
    const auto n = static_cast<Eigen::Index>(v.size());
    Mat m(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const json& row = v[static_cast<std::size_t>(i)];
      if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n)
        throw config_error(p + "/" + std::to_string(i), "expected a row of length " + std::to_string(n));
      for (Eigen::Index k = 0; k < n; ++k)
        m(i, k) = as_number(row[static_cast<std::size_t>(k)], p + "/" + std::to_string(i) + "/" + std::to_string(k));
    }
    return m;
  }
  std::vector<Vec> points(const std::string& key, int d, std::vector<Vec> fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_array() || v.empty()) throw config_error(child(key), "expected a nonempty list of points");
    std::vector<Vec> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const std::string p = child(key) + "/" + std::to_string(i);
      if (!v[i].is_array() || static_cast<int>(v[i].size()) != d)
        throw config_error(p, "expected a point with " + std::to_string(d) + " coordinates");
      Vec x(d);
      for (int k = 0; k < d; ++k) x(k) = as_number(v[i][static_cast<std::size_t>(k)], p + "/" + std::to_string(k));
      out.push_back(x);
    }
    return out;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw config_error(child(it.key()), "unknown key");
  }

  static double as_number(const json& v, const std::string& path) {
    if (!v.is_number()) throw config_error(path, "expected a number");
    return v.get<double>();
  }
  static int as_integer(const json& v, const std::string& path) {
    if (!v.is_number_integer()) throw config_error(path, "expected an integer");
    return v.get<int>();
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

// ---------------------------------------------------------------- config

struct WeightSpec {
  MatrixWeight matrix = MatrixWeight::identity(1);
  std::optional<ScalarWeight> scalar;  // set when the config names a scalar weight
  bool identity = true;
};

inline ScalarWeight parse_scalar_weight(Obj o, int d);

inline Polynomial parse_polynomial(const json& j, const std::string& path, int d) {
  if (!j.is_array() || j.empty()) throw config_error(path, "expected a list of terms");
  Polynomial p;
  for (std::size_t i = 0; i < j.size(); ++i) {
    Obj t(j[i], path + "/" + std::to_string(i));
    const double c = t.number("coef");
    const json& pw = t.raw("powers");
    if (!pw.is_array() || static_cast<int>(pw.size()) != d)
      throw config_error(t.child("powers"), "expected " + std::to_string(d) + " exponents");
    std::vector<int> a(d);
    for (int k = 0; k < d; ++k) {
      a[k] = Obj::as_integer(pw[static_cast<std::size_t>(k)], t.child("powers") + "/" + std::to_string(k));
      if (a[k] < 0) throw config_error(t.child("powers"), "exponents must be nonnegative");
    }
    t.finish();
    p.terms[a] += c;
  }
  return p;
}

inline ScalarWeight parse_scalar_weight(Obj o, int d) {
  const std::string kind = o.text("kind");
  ScalarWeight w = ScalarWeight::constant(1.0);
  if (kind == "constant") {
    const double v = o.number("value", 1.0);
    if (!(v > 0.0)) throw config_error(o.child("value"), "constant weight must be positive");
    w = ScalarWeight::constant(v);
  } else if (kind == "radial_power") {
    w = ScalarWeight::radial_power(o.number("gamma"));
  } else if (kind == "coordinate_power") {
    const int axis = o.integer("axis");
    if (axis < 0 || axis >= d) throw config_error(o.child("axis"), "axis out of range");
    w = ScalarWeight::poly_abs_power(Polynomial::coordinate(d, axis), o.number("beta"));
  } else if (kind == "poly_abs_power") {
    w = ScalarWeight::poly_abs_power(parse_polynomial(o.raw("terms"), o.child("terms"), d), o.number("beta"));
  } else if (kind == "product") {
    const json& f = o.raw("factors");
    if (!f.is_array() || f.empty()) throw config_error(o.child("factors"), "expected a nonempty list");
    std::vector<ScalarWeight> parts;
    for (std::size_t i = 0; i < f.size(); ++i) parts.push_back(parse_scalar_weight(Obj(f[i], o.child("factors") + "/" + std::to_string(i)), d));
    w = ScalarWeight::product(std::move(parts));
  } else {
    throw config_error(o.child("kind"), "unknown scalar weight kind '" + kind + "'");
  }
  o.finish();
  return w;
}

inline std::vector<ScalarWeight> parse_entries(Obj& o, int d) {
  const json& e = o.raw("entries");
  if (!e.is_array() || e.empty()) throw config_error(o.child("entries"), "expected a nonempty list of scalar weights");
  std::vector<ScalarWeight> out;
  for (std::size_t i = 0; i < e.size(); ++i)
    out.push_back(parse_scalar_weight(Obj(e[i], o.child("entries") + "/" + std::to_string(i)), d));
  return out;
}

inline WeightSpec parse_weight(const json& j, const std::string& path, int d) {
  Obj peek(j, path);
  const std::string kind = peek.text("kind");
  WeightSpec ws;
  if (kind == "diagonal" || kind == "conjugated" || kind == "diag_dominant") {
    Obj o(j, path);
    o.text("kind");
    auto entries = parse_entries(o, d);
    const int n = static_cast<int>(entries.size());
    if (kind == "diagonal") {
      ws.matrix = MatrixWeight::diagonal(std::move(entries));
    } else if (kind == "conjugated") {
      Mat u = o.matrix("unitary");
      if (u.rows() != n) throw config_error(o.child("unitary"), "size must match the number of entries");
      try {
        ws.matrix = MatrixWeight::conjugated(u.cast<cplx>(), std::move(entries));
      } catch (const Error& e) {
        throw config_error(o.child("unitary"), e.what());
      }
    } else {
      const json& off = o.raw("offdiag");
      if (!off.is_array()) throw config_error(o.child("offdiag"), "expected a list of polynomials");
      std::vector<Polynomial> polys;
      for (std::size_t i = 0; i < off.size(); ++i) polys.push_back(parse_polynomial(off[i], o.child("offdiag") + "/" + std::to_string(i), d));
      const double eps = o.number("eps", 0.5);
      try {
        ws.matrix = MatrixWeight::diag_dominant(std::move(entries), std::move(polys), eps);
      } catch (const Error& e) {
        throw config_error(o.path(), e.what());
      }
    }
    o.finish();
    ws.identity = false;
    return ws;
  }
  ws.scalar = parse_scalar_weight(Obj(j, path), d);
  ws.matrix = MatrixWeight::scalar(*ws.scalar);
  ws.identity = kind == "constant" && j.value("value", 1.0) == 1.0;
  return ws;
}

struct GridSpec {
  int n = 256;
  double half_period = 16.0 * std::numbers::pi;
};

struct QuadSpec {
  std::string rule = "mapped_grid";
  int nodes = 48;  // per axis for mapped_grid, total for monte_carlo
  std::uint64_t seed = 1;

  BallQuadrature make() const {
    return rule == "monte_carlo" ? BallQuadrature::monte_carlo(static_cast<std::size_t>(nodes), seed)
                                 : BallQuadrature::mapped_grid(nodes);
  }
  // A second rule with different nodes, for two-sided comparisons.
  BallQuadrature independent() const {
    return rule == "monte_carlo" ? BallQuadrature::monte_carlo(static_cast<std::size_t>(nodes), mix_seed(seed, 17))
                                 : BallQuadrature::mapped_grid(nodes + 7);
  }
};

struct FamilySpec {
  std::string kind = "centered";
  int m_lo = -3, m_hi = 3;
  double max_center_norm = 4.0;

  BallFamily make(const DilationGroup& g) const {
    return kind == "lattice" ? lattice_family(g, max_center_norm, m_lo, m_hi) : centered_family(g.dim(), m_lo, m_hi);
  }
};

struct ExperimentSpec {
  std::string name;
  std::string path;
  // union of per-experiment options; defaults apply where a key is absent
  std::optional<double> expect_min, expect_max;
  std::vector<double> lambdas{2.0, 4.0, 8.0};
  int pairs = 10;
  std::uint64_t seed = 1;
  std::vector<double> r_grid{1.1, 1.2, 1.3, 1.4, 1.5, 1.75, 2.0};
  double cap = 1.2;
  double min_r = 1.2;
  std::vector<double> radii{1.0};
  std::vector<Vec> centers;
  double sharpness = 1.0;
  double max_spread = 1.25;
  double r0 = 0.0;  // 0: computed from the group
  bool resolution_check = false;
  double covering_c = 0.5;
  double lo = 0.25, hi = 4.0;
  double independence_lo = 0.5, independence_hi = 2.0;
  int random_sets = 2;
  double tolerance = 1e-8;
};

struct ExperimentConfig {
  json source;
  std::string hash;
  Mat generator;
  double p_scale = 1.0;
  WeightSpec weight;
  std::vector<double> p{2.0}, q{1.0, 2.0}, s{-1.0, 0.0, 1.0};
  FamilySpec family;
  QuadSpec quad;
  GridSpec grid;
  BapuOptions bapu;
  std::uint64_t ensemble_seed = 3;
  std::string output = "report";
  std::vector<ExperimentSpec> experiments;

  int dim() const { return static_cast<int>(generator.rows()); }
};

inline const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"apcheck",  "invariance", "doubling", "rholder", "reducing",
                                              "multiplier", "sampling", "besov",    "frame",   "covering"};
  return names;
}

inline std::string experiment_summary(const std::string& name) {
  static const std::map<std::string, std::string> text{
      {"apcheck", "A_p quantity over a ball family; constant = family maximum"},
      {"invariance", "A_p quantity of W o T on B against W on T(B) for random affine T"},
      {"doubling", "w(lambda B) against the A_p doubling bound"},
      {"rholder", "reverse Holder exponent search for a scalar weight"},
      {"reducing", "reducing operators A_B, A_B^# and their distortion"},
      {"multiplier", "band-limited Fourier multiplier ratios in L^p(W)"},
      {"sampling", "sampling inequality ratios on the dilated lattice"},
      {"besov", "Besov and sequence norm equivalence, BAPU independence"},
      {"frame", "Parseval, round trip and dual-route atoms of the tight frame"},
      {"covering", "structured covering: height, separation and coverage"}};
  return text.at(name);
}

inline ExperimentSpec parse_experiment(const json& j, const std::string& path, int d) {
  Obj o(j, path);
  ExperimentSpec e;
  e.path = path;
  e.name = o.text("name");
  static const std::map<std::string, std::set<std::string>> allowed{
      {"apcheck", {"expect_min", "expect_max"}},
      {"invariance", {"pairs", "seed"}},
      {"doubling", {"lambdas"}},
      {"rholder", {"r_grid", "cap", "min_r"}},
      {"reducing", {}},
      {"multiplier", {"radii", "centers", "sharpness", "max_spread"}},
      {"sampling", {"radii", "centers", "r0", "max_spread", "resolution_check"}},
      {"besov", {"window", "independence_window", "random_sets", "centers", "radii"}},
      {"frame", {"tolerance", "centers", "radii"}},
      {"covering", {"c"}}};
  const auto it = allowed.find(e.name);
  if (it == allowed.end()) throw config_error(o.child("name"), "unknown experiment '" + e.name + "'");
  for (auto k = j.begin(); k != j.end(); ++k)
    if (k.key() != "name" && !it->second.count(k.key())) throw config_error(o.child(k.key()), "unknown key");
  if (o.has("expect_min")) e.expect_min = o.number("expect_min");
  if (o.has("expect_max")) e.expect_max = o.number("expect_max");
  e.pairs = o.integer("pairs", e.pairs);
  if (o.has("seed")) e.seed = static_cast<std::uint64_t>(o.integer("seed"));
  e.lambdas = o.numbers("lambdas", e.lambdas);
  e.r_grid = o.numbers("r_grid", e.r_grid);
  e.cap = o.number("cap", e.cap);
  e.min_r = o.number("min_r", e.min_r);
  e.radii = o.numbers("radii", e.radii);
  e.centers = o.points("centers", d, {Vec::Zero(d)});
  e.sharpness = o.number("sharpness", e.sharpness);
  e.max_spread = o.number("max_spread", e.max_spread);
  e.r0 = o.number("r0", e.r0);
  e.resolution_check = o.boolean("resolution_check", e.resolution_check);
  e.covering_c = o.number("c", e.covering_c);
  if (o.has("window")) {
    const auto w = o.numbers("window", {});
    if (w.size() != 2) throw config_error(o.child("window"), "expected [low, high]");
    e.lo = w[0], e.hi = w[1];
  }
  if (o.has("independence_window")) {
    const auto w = o.numbers("independence_window", {});
    if (w.size() != 2) throw config_error(o.child("independence_window"), "expected [low, high]");
    e.independence_lo = w[0], e.independence_hi = w[1];
  }
  e.random_sets = o.integer("random_sets", e.random_sets);
  e.tolerance = o.number("tolerance", e.tolerance);
  o.finish();
  return e;
}

inline ExperimentConfig parse_config(const json& j) {
  ExperimentConfig c;
  c.source = j;
  c.hash = "fnv1a64:" + hex64(fnv1a(j.dump()));
  Obj o(j, "");
  c.generator = o.matrix("dilation");
  const int d = c.dim();
  c.p_scale = o.number("p_scale", 1.0);
  if (o.has("weight")) c.weight = parse_weight(o.raw("weight"), o.child("weight"), d);
  c.p = o.numbers("p", c.p);
  c.q = o.numbers("q", c.q);
  c.s = o.numbers("s", c.s);
  if (o.has("family")) {
    Obj f(o.raw("family"), o.child("family"));
    c.family.kind = f.text("kind", c.family.kind);
    if (c.family.kind != "centered" && c.family.kind != "lattice")
      throw config_error(f.child("kind"), "family kind must be 'centered' or 'lattice'");
    c.family.m_lo = f.integer("m_lo", c.family.m_lo);
    c.family.m_hi = f.integer("m_hi", c.family.m_hi);
    c.family.max_center_norm = f.number("max_center_norm", c.family.max_center_norm);
    f.finish();
  }
  if (o.has("quadrature")) {
    Obj f(o.raw("quadrature"), o.child("quadrature"));
    c.quad.rule = f.text("rule", c.quad.rule);
    if (c.quad.rule != "mapped_grid" && c.quad.rule != "monte_carlo")
      throw config_error(f.child("rule"), "rule must be 'mapped_grid' or 'monte_carlo'");
    c.quad.nodes = f.integer("nodes", c.quad.rule == "monte_carlo" ? 1 << 14 : c.quad.nodes);
    if (f.has("seed")) c.quad.seed = static_cast<std::uint64_t>(f.integer("seed"));
    f.finish();
  }
  if (o.has("grid")) {
    Obj f(o.raw("grid"), o.child("grid"));
    c.grid.n = f.integer("n", c.grid.n);
    if (f.has("half_period") && f.has("half_period_pi"))
      throw config_error(f.path(), "give either half_period or half_period_pi");
    if (f.has("half_period")) c.grid.half_period = f.number("half_period");
    if (f.has("half_period_pi")) c.grid.half_period = f.number("half_period_pi") * std::numbers::pi;
    f.finish();
  }
  if (o.has("covering")) {
    Obj f(o.raw("covering"), o.child("covering"));
    c.bapu.c0 = f.number("c0", c.bapu.c0);
    c.bapu.max_norm = f.number("max_norm", c.bapu.max_norm);
    c.bapu.transition = f.number("transition", c.bapu.transition);
    f.finish();
  }
  if (o.has("ensemble")) {
    Obj f(o.raw("ensemble"), o.child("ensemble"));
    c.ensemble_seed = static_cast<std::uint64_t>(f.integer("seed", 3));
    f.finish();
  }
  c.output = o.text("output", c.output);
  const json& ex = o.raw("experiments");
  if (!ex.is_array() || ex.empty()) throw config_error(o.child("experiments"), "expected a nonempty list");
  for (std::size_t i = 0; i < ex.size(); ++i)
    c.experiments.push_back(parse_experiment(ex[i], o.child("experiments") + "/" + std::to_string(i), d));
  o.finish();
  return c;
}

inline json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigInvalid, "cannot open " + path);
  try {
    return json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ConfigInvalid, path + ": " + e.what());
  }
}

// Cross-field checks that do not need a run. Empty means valid.
inline std::vector<std::string> diagnostics(const ExperimentConfig& c) {
  std::vector<std::string> out;
  auto bad = [&](const std::string& path, const std::string& what) { out.push_back(path + ": " + what); };
  try {
    DilationGroup g(c.generator, c.p_scale);
  } catch (const Error& e) {
    bad("/dilation", e.what());
  }
  for (std::size_t i = 0; i < c.p.size(); ++i)
    if (!(c.p[i] > 0.0)) bad("/p/" + std::to_string(i), "p must be positive");
  for (std::size_t i = 0; i < c.q.size(); ++i)
    if (!(c.q[i] > 0.0)) bad("/q/" + std::to_string(i), "q must be positive");
  if (c.family.m_lo > c.family.m_hi) bad("/family", "m_lo exceeds m_hi");
  if (c.quad.rule == "mapped_grid" && c.quad.nodes < 8) bad("/quadrature/nodes", "mapped grid needs at least 8 nodes per axis");
  if (c.quad.rule == "monte_carlo" && c.quad.nodes < 64) bad("/quadrature/nodes", "quadrature needs at least 64 nodes");
  if (c.grid.n < 8 || (c.grid.n & (c.grid.n - 1)) != 0) bad("/grid/n", "n must be a power of two, at least 8");
  if (!(c.grid.half_period > 0.0)) bad("/grid", "half period must be positive");
  if (!(c.bapu.c0 > 0.0 && c.bapu.c0 <= 0.5)) bad("/covering/c0", "c0 must lie in (0, 1/2]");
  if (!(c.bapu.transition > 0.0 && c.bapu.transition <= 1.0)) bad("/covering/transition", "transition must lie in (0, 1]");
  const int N = c.weight.matrix.size();
  for (const auto& e : c.experiments) {
    if ((e.name == "rholder") && !c.weight.scalar) bad(e.path, "reverse Holder search needs a scalar weight");
    if (e.name == "reducing")
      for (double p : c.p)
        if (!(p > 1.0)) bad(e.path, "reducing operators need p > 1");
    if (e.name == "doubling")
      for (double l : e.lambdas)
        if (!(l >= 1.0)) bad(e.path + "/lambdas", "doubling factors must be >= 1");
    if (e.name == "rholder")
      for (double r : e.r_grid)
        if (!(r > 1.0)) bad(e.path + "/r_grid", "reverse Holder exponents must exceed 1");
    for (double R : e.radii)
      if (!(R > 0.0)) bad(e.path + "/radii", "radii must be positive");
    if (e.name == "sampling" && c.grid.n >= 8) {
      try {
        const DilationGroup g(c.generator, c.p_scale);
        const FourierGrid grid(c.dim(), c.grid.n, c.grid.half_period);
        if (const auto issue = sampling_alignment_issue(g, grid, e.radii); !issue.empty()) bad(e.path, issue);
        if (e.resolution_check) {
          if (const auto issue = sampling_alignment_issue(g, grid.refined(), e.radii); !issue.empty())
            bad(e.path, "refined grid: " + issue);
        }
      } catch (const Error& err) {
        bad(e.path, err.what());
      }
    }
    if ((e.name == "besov" || e.name == "frame") && N < 1) bad(e.path, "weight has no components");
  }
  return out;
}

// ---------------------------------------------------------------- results

struct Verdict {
  std::string claim;
  bool pass = false;
  std::string detail;
};

struct ExperimentResult {
  std::string name;
  std::vector<std::pair<std::string, std::string>> facts;
  std::vector<Verdict> verdicts;
  std::string csv_header;
  std::vector<std::string> csv_rows;

  void fact(const std::string& k, const std::string& v) { facts.emplace_back(k, v); }
  void verdict(const std::string& claim, bool pass, const std::string& detail) { verdicts.push_back({claim, pass, detail}); }
  bool passed() const {
    for (const auto& v : verdicts)
      if (!v.pass) return false;
    return true;
  }
};

class Row {
 public:
  Row& operator<<(double v) { return add(num(v)); }
  Row& operator<<(const std::string& v) { return add(v); }
  Row& operator<<(const Vec& v) { return add(vec_str(v)); }
  std::string str() const { return s_; }

 private:
  Row& add(const std::string& v) {
    s_ += (s_.empty() ? "" : ",") + v;
    return *this;
  }
  std::string s_;
};

struct RunContext {
  const ExperimentConfig& cfg;
  DilationGroup g;
  BallQuadrature quad;
  BallFamily family;
  int components;

  explicit RunContext(const ExperimentConfig& c)
      : cfg(c), g(c.generator, c.p_scale), quad(c.quad.make()), family(c.family.make(g)),
        components(c.weight.matrix.size()) {}

  FourierGrid grid() const { return FourierGrid(cfg.dim(), cfg.grid.n, cfg.grid.half_period); }
  std::vector<UnitSpectrum> ensemble() const { return standard_ensemble(g, components, cfg.ensemble_seed); }
};

// ---------------------------------------------------------------- experiments

inline ExperimentResult run_apcheck(const RunContext& ctx, const ExperimentSpec& e) {
  ExperimentResult r;
  r.csv_header = "p,center,radius,value,error";
  for (double p : ctx.cfg.p) {
    const ApReport rep = ctx.cfg.weight.scalar ? estimate_ap_constant(ctx.g, *ctx.cfg.weight.scalar, p, ctx.family, ctx.quad)
                                               : estimate_ap_constant(ctx.g, ctx.cfg.weight.matrix, p, ctx.family, ctx.quad);
    bool finite = true;
    double err = 0.0;
    for (const auto& row : rep.rows) {
      r.csv_rows.push_back((Row() << p << row.ball.center << row.ball.radius << row.value << row.error).str());
      finite = finite && std::isfinite(row.value);
    }
    err = rep.rows[rep.argmax].error;
    const std::string tag = "p=" + num(p);
    r.fact(tag + " weight", rep.weight_id);
    r.fact(tag + " family", rep.family);
    r.fact(tag + " quadrature", rep.quadrature);
    r.fact(tag + " constant", num(rep.constant) + " +- " + num(err));
    r.verdict("A_p quantity finite on every ball of the family (" + tag + ")", finite, "constant " + num(rep.constant));
    if (e.expect_min)
      r.verdict("family constant >= " + num(*e.expect_min) + " (" + tag + ")", rep.constant >= *e.expect_min,
                num(rep.constant));
    if (e.expect_max)
      r.verdict("family constant <= " + num(*e.expect_max) + " (" + tag + ")", rep.constant <= *e.expect_max,
                num(rep.constant));
  }
  return r;
}

inline ExperimentResult run_invariance(const RunContext& ctx, const ExperimentSpec& e) {
  ExperimentResult r;
  r.csv_header = "p,pair,scale,shift,center,radius,lhs,lhs_error,rhs,rhs_error,discrepancy";
  const int d = ctx.cfg.dim();
  const BallQuadrature qa = ctx.quad, qb = ctx.cfg.quad.independent();
  for (double p : ctx.cfg.p) {
    Rng rng(mix_seed(e.seed, 1));
    bool ok = true;
    double worst = 0.0;
    for (int k = 0; k < e.pairs; ++k) {
      const double t = std::exp(std::log(2.0) * (2.0 * rng.uniform() - 1.0));
      Vec shift(d);
      for (int i = 0; i < d; ++i) shift(i) = 2.0 * rng.uniform() - 1.0;
      const AffineMap T{t, shift};
      const InvarianceReport rep = ctx.cfg.weight.scalar
                                       ? invariance_check(ctx.g, *ctx.cfg.weight.scalar, p, T, ctx.family, qa, qb)
                                       : invariance_check(ctx.g, ctx.cfg.weight.matrix, p, T, ctx.family, qa, qb);
      for (const auto& row : rep.rows)
        r.csv_rows.push_back((Row() << p << static_cast<double>(k) << t << shift << row.ball.center << row.ball.radius
                                    << row.lhs << row.lhs_error << row.rhs << row.rhs_error << row.discrepancy)
                                 .str());
      ok = ok && rep.within_error;
      worst = std::max(worst, rep.max_discrepancy);
    }
    r.fact("p=" + num(p) + " quadrature", qa.descriptor() + " | " + qb.descriptor());
    r.fact("p=" + num(p) + " max discrepancy", num(worst));
    r.verdict("affine invariance: |Q(W o T, B) - Q(W, T(B))| <= 2 x combined error (p=" + num(p) + ")", ok,
              std::to_string(e.pairs) + " pairs");
  }
  return r;
}

inline ExperimentResult run_doubling(const RunContext& ctx, const ExperimentSpec& e) {
  ExperimentResult r;
  r.csv_header = "p,variant,center,radius,lambda,ratio,error,bound";
  const bool constant = ctx.cfg.weight.scalar && ctx.cfg.weight.scalar->describe().rfind("constant", 0) == 0;
  for (double p : ctx.cfg.p) {
    const DoublingReport rep = ctx.cfg.weight.scalar
                                   ? doubling_check(ctx.g, *ctx.cfg.weight.scalar, p, ctx.family, e.lambdas, ctx.quad)
                                   : doubling_check(ctx.g, ctx.cfg.weight.matrix, p, ctx.family, e.lambdas, ctx.quad);
    double exact = 0.0;
    for (const auto& row : rep.rows) {
      r.csv_rows.push_back((Row() << p << row.variant << row.ball.center << row.ball.radius << row.lambda << row.ratio
                                  << row.error << row.bound)
                               .str());
      exact = std::max(exact, std::abs(row.ratio / std::pow(row.lambda, ctx.g.nu()) - 1.0));
    }
    const std::string tag = "p=" + num(p);
    for (const auto& [k, v] : rep.fitted_beta) r.fact(tag + " fitted exponent " + k, num(v));
    r.fact(tag + " nu p", num(rep.nu_p));
    r.verdict("doubling: w(lambda B) <= Q lambda^{nu p} w(B) on every sampled ball (" + tag + ")", rep.within_bound, "");
    r.verdict("doubling ratios are at least 1 (" + tag + ")", rep.ratios_at_least_one, "");
    if (constant)
      r.verdict("constant weight: ratio equals lambda^nu to 1e-10 (" + tag + ")", exact <= 1e-10, "max rel. dev. " + num(exact));
  }
  return r;
}

inline ExperimentResult run_rholder(const RunContext& ctx, const ExperimentSpec& e) {
  ExperimentResult r;
  r.csv_header = "r,max_ratio,error";
  const ReverseHolderResult res = reverse_holder_search(ctx.g, *ctx.cfg.weight.scalar, ctx.family, e.r_grid, ctx.quad, e.cap);
  // ladder estimate: the same search on the next coarser rule
  const ReverseHolderResult coarse =
      reverse_holder_search(ctx.g, *ctx.cfg.weight.scalar, ctx.family, e.r_grid, ctx.quad.coarser(), e.cap);
  for (std::size_t i = 0; i < res.table.size(); ++i) {
    const auto [rr, c] = res.table[i];
    const double err = i < coarse.table.size() ? std::abs(c - coarse.table[i].second) : 0.0;
    r.csv_rows.push_back((Row() << rr << c << (std::isfinite(err) ? err : c)).str());
  }
  r.fact("best r", num(res.r_best));
  r.fact("c1 at best r", num(res.c1));
  r.verdict("reverse Holder: some r >= " + num(e.min_r) + " with constant <= " + num(e.cap),
            res.found && res.r_best >= e.min_r, "r = " + num(res.r_best) + ", c1 = " + num(res.c1));
  return r;
}

inline ExperimentResult run_reducing(const RunContext& ctx, const ExperimentSpec&) {
  ExperimentResult r;
  r.csv_header = "p,center,radius,distortion,distortion_sharp,product_norm,largest_q,p2_deviation,error";
  const MatrixWeight& w = ctx.cfg.weight.matrix;
  const double limit = std::sqrt(static_cast<double>(w.size())) * 1.05;
  for (double p : ctx.cfg.p) {
    double worst = 0.0, prod = 0.0, dev = 0.0;
    for (const auto& b : ctx.family.balls) {
      const ReducingPair rp = reducing_operators(ctx.g, w, b, p, ctx.quad);
      const ReducingPair rc = reducing_operators(ctx.g, w, b, p, ctx.quad.coarser());
      const double err = std::max({std::abs(rp.distortion - rc.distortion), std::abs(rp.distortion_sharp - rc.distortion_sharp),
                                   std::abs(rp.product_norm - rc.product_norm)});
      double d2 = 0.0;
      if (p == 2.0) {
        const NodeSet ns = ctx.quad.nodes(ctx.g, b, w.singular_levels_1d());
        CMat avg = CMat::Zero(w.size(), w.size());
        for (std::size_t i = 0; i < ns.size(); ++i)
          avg += ns.w(static_cast<Eigen::Index>(i)) *
                 detail::eval_nudged([&](const Vec& y) { return w.power(y, 1.0, ns.lo_at(i)); },
                                     Vec(ns.x.col(static_cast<Eigen::Index>(i))));
        const CMat root = detail::hermitian_power(avg, 0.5);
        d2 = spectral_norm(CMat(rp.a - root)) / spectral_norm(root);
        dev = std::max(dev, d2);
      }
      r.csv_rows.push_back((Row() << p << b.center << b.radius << rp.distortion << rp.distortion_sharp << rp.product_norm
                                  << rp.largest_passing_q << d2 << err)
                               .str());
      worst = std::max({worst, rp.distortion, rp.distortion_sharp});
      prod = std::max(prod, rp.product_norm);
    }
    const std::string tag = "p=" + num(p);
    r.fact(tag + " max distortion", num(worst));
    r.fact(tag + " max ||A_B A_B^#||", num(prod));
    r.verdict("reducing operators: distortion <= sqrt(N) x 1.05 (" + tag + ")", worst <= limit, num(worst));
    r.verdict("||A_B A_B^#|| bounded over the family (" + tag + ")", std::isfinite(prod), num(prod));
    if (p == 2.0)
      r.verdict("p = 2: A_B equals (avg_B W)^{1/2} to 1e-6", dev <= 1e-6, num(dev));
  }
  return r;
}

inline ExperimentResult run_covering(const RunContext& ctx, const ExperimentSpec& e) {
  ExperimentResult r;
  r.csv_header = "index,center,bracket,error";
  const StructuredCovering cov = build_structured_covering(ctx.g, e.covering_c, ctx.cfg.bapu.max_norm);
  // centers and brackets are constructed, not estimated
  for (std::size_t j = 0; j < cov.size(); ++j)
    r.csv_rows.push_back((Row() << static_cast<double>(j) << cov.centers[j] << cov.brackets[j] << 0.0).str());
  r.fact("centers", std::to_string(cov.size()));
  r.fact("radius factor c", num(cov.c));
  r.fact("separation", num(cov.separation));
  r.fact("shrink c'", num(cov.shrink));
  r.fact("triangle constant", num(cov.triangle_constant));
  r.fact("height", std::to_string(cov.height));
  r.fact("min cover", std::to_string(cov.min_cover));
  r.verdict("covering: every sampled point of the truncation lies in some ball", cov.min_cover >= 1,
            "min cover " + std::to_string(cov.min_cover));
  r.verdict("covering: finite height", cov.height >= 1 && cov.height <= 64, "height " + std::to_string(cov.height));
  return r;
}

inline ExperimentResult run_multiplier(const RunContext& ctx, const ExperimentSpec& e) {
  ExperimentResult r;
  r.csv_header = "p,radius,center,field,ratio,error";
  const FourierGrid grid = ctx.grid();
  const double s = e.sharpness;
  const SymbolFn tmpl = [&ctx, s](const Vec& z) { return cplx(smooth_bump(ctx.g.quasi_norm(z), s)); };
  for (double p : ctx.cfg.p) {
    const MultiplierReport rep =
        multiplier_bound_experiment(ctx.g, ctx.cfg.weight.matrix, p, tmpl, e.radii, e.centers, ctx.ensemble(), grid);
    for (const auto& row : rep.table.rows)
      r.csv_rows.push_back((Row() << p << row.radius << row.center << row.field << row.ratio << row.error).str());
    const std::string tag = "p=" + num(p);
    r.fact(tag + " max ratio", num(rep.table.max_ratio));
    r.fact(tag + " symbol max", num(rep.symbol_max));
    r.fact(tag + " required decay order", num(rep.required_m));
    r.fact(tag + " decay certificate", num(rep.certificate));
    r.fact(tag + " per-radius spread", num(rep.table.spread));
    if (ctx.cfg.weight.identity)
      r.verdict("multiplier, W = I: ratio <= max|phi| + 1e-8 (" + tag + ")", rep.table.max_ratio <= rep.symbol_max + 1e-8,
                num(rep.table.max_ratio));
    else
      r.verdict("multiplier: per-radius maxima spread <= " + num(e.max_spread) + " (" + tag + ")",
                rep.table.spread <= e.max_spread, num(rep.table.spread));
    r.verdict("multiplier ratios finite (" + tag + ")", std::isfinite(rep.table.max_ratio), "");
  }
  return r;
}

inline ExperimentResult run_sampling(const RunContext& ctx, const ExperimentSpec& e) {
  ExperimentResult r;
  r.csv_header = "p,radius,center,field,ratio,error";
  const FourierGrid grid = ctx.grid();
  const double r0 = e.r0 > 0.0 ? e.r0 : compute_r0(ctx.g, 0.01);
  const auto ens = ctx.ensemble();
  for (double p : ctx.cfg.p) {
    const ExperimentTable tab =
        sampling_inequality_experiment(ctx.g, ctx.cfg.weight.matrix, p, e.radii, e.centers, ens, grid, r0, ctx.quad);
    for (const auto& row : tab.rows)
      r.csv_rows.push_back((Row() << p << row.radius << row.center << row.field << row.ratio << row.error).str());
    const std::string tag = "p=" + num(p);
    r.fact(tag + " r0", num(r0));
    r.fact(tag + " ratio range", num(tab.min_ratio) + " .. " + num(tab.max_ratio));
    r.fact(tag + " per-radius spread", num(tab.spread));
    r.verdict("sampling ratios finite and positive (" + tag + ")",
              std::isfinite(tab.max_ratio) && tab.min_ratio > 0.0, "");
    r.verdict("sampling: per-radius maxima spread <= " + num(e.max_spread) + " (" + tag + ")", tab.spread <= e.max_spread,
              num(tab.spread));
    if (e.resolution_check) {
      const ExperimentTable fine = sampling_inequality_experiment(ctx.g, ctx.cfg.weight.matrix, p, e.radii, e.centers, ens,
                                                                  grid.refined(), r0, ctx.quad, false);
      const double drift = std::abs(fine.max_ratio / tab.max_ratio - 1.0);
      r.fact(tag + " doubled-resolution max ratio", num(fine.max_ratio));
      r.verdict("sampling: doubled resolution agrees within 5% (" + tag + ")", drift <= 0.05, num(drift));
    }
  }
  return r;
}

inline std::vector<BandLimitedField> frame_fields(const RunContext& ctx, const ExperimentSpec& e, const FourierGrid& grid) {
  std::vector<BandLimitedField> out;
  const auto ens = ctx.ensemble();
  for (const Vec& c : e.centers)
    for (double R : e.radii)
      for (const auto& u : ens) {
        out.push_back(transport_field(ctx.g, grid, u, ctx.components, c, R));
        out.back().id = u.id + "@" + vec_str(c) + "/" + num(R);
      }
  return out;
}

inline ExperimentResult run_frame(const RunContext& ctx, const ExperimentSpec& e) {
  ExperimentResult r;
  r.csv_header = "field,parseval_rel_error,roundtrip_rel_error";
  const FourierGrid grid = ctx.grid();
  const Bapu b = build_bapu(ctx.g, grid, ctx.cfg.bapu);
  double parseval = 0.0, trip = 0.0;
  for (const auto& f : frame_fields(ctx, e, grid)) {
    const auto spectra = spectrum_of(f);
    const auto c = analyze(b, spectra);
    double ce = 0.0, fe = 0.0, dm = 0.0, fm = 0.0;
    for (const auto& k : c.patch)
      for (const auto& v : k) ce += v.squaredNorm();
    for (const auto& s : spectra) fe += s.squaredNorm() * grid.freq_cell();
    const auto back = synthesize_spectra(b, c);
    for (std::size_t i = 0; i < spectra.size(); ++i) {
      dm = std::max(dm, (back[i] - spectra[i]).cwiseAbs().maxCoeff());
      fm = std::max(fm, spectra[i].cwiseAbs().maxCoeff());
    }
    const double pr = std::abs(ce - fe) / fe, tr = dm / fm;
    r.csv_rows.push_back((Row() << f.id << pr << tr).str());
    parseval = std::max(parseval, pr);
    trip = std::max(trip, tr);
  }
  double dual = 0.0;
  for (std::size_t k : {std::size_t{0}, b.patches.size() / 2, b.patches.size() - 1}) {
    std::vector<int> l(ctx.cfg.dim(), 1);
    const CVec a1 = atom_by_spectrum(b, k, l), a2 = atom_direct(b, k, l);
    dual = std::max(dual, (a1 - a2).cwiseAbs().maxCoeff() / a1.cwiseAbs().maxCoeff());
  }
  r.fact("patches", std::to_string(b.patches.size()));
  r.fact("min denominator", num(b.min_denominator));
  r.fact("max Parseval deviation", num(parseval));
  r.fact("max round-trip error", num(trip));
  r.fact("max dual-route atom difference", num(dual));
  r.verdict("tight frame: sum |<f, omega>|^2 = ||f||^2 within " + num(e.tolerance), parseval <= e.tolerance, num(parseval));
  r.verdict("retract: synthesis after analysis is the identity within " + num(e.tolerance), trip <= e.tolerance, num(trip));
  r.verdict("atoms agree in frequency and direct form within " + num(e.tolerance), dual <= e.tolerance, num(dual));
  return r;
}

inline ExperimentResult run_besov(const RunContext& ctx, const ExperimentSpec& e) {
  ExperimentResult r;
  r.csv_header = "kind,set,s,p,q,ratio,error";
  const FourierGrid grid = ctx.grid();
  const Bapu b = build_bapu(ctx.g, grid, ctx.cfg.bapu);
  BapuOptions alt = ctx.cfg.bapu;
  alt.profile = ctx.cfg.bapu.profile == BumpProfile::Exp ? BumpProfile::ExpSquared : BumpProfile::Exp;
  const Bapu b2 = build_bapu(ctx.g, grid, alt);
  const auto fields = frame_fields(ctx, e, grid);
  const CellModel cells = cell_model(ctx.g);
  const MatrixWeight& w = ctx.cfg.weight.matrix;

  // relative error of a norm ratio: spectral tail beyond the last patch, else roundoff
  std::map<std::string, double> rel;
  std::vector<std::pair<std::string, FrameCoefficients>> own, extra;
  for (const auto& f : fields) {
    own.push_back({"C(" + f.id + ")", analyze(b, f)});
    rel[f.id] = rel[own.back().first] = std::sqrt(uncovered_mass(b, spectrum_of(f))) + 1e-12;
  }
  auto err = [&rel](const std::string& id, double ratio) { return ratio * (rel.count(id) ? rel.at(id) : 1e-12); };
  const std::size_t K = b.patches.size();
  for (int k = 0; k < e.random_sets; ++k)
    extra.push_back({"random" + std::to_string(k),
                     random_coefficients(b, ctx.components, {std::size_t(k) % K, K / 2, K - 1 - std::size_t(k) % K},
                                         mix_seed(ctx.cfg.ensemble_seed, 100 + static_cast<std::uint64_t>(k)))});

  const auto main = norm_equivalence_experiment(b, w, fields, own, ctx.cfg.s, ctx.cfg.p, ctx.cfg.q, cells, BesovScale::Bracket);
  const auto side = norm_equivalence_experiment(b, w, {}, extra, ctx.cfg.s, ctx.cfg.p, ctx.cfg.q, cells, BesovScale::Bracket);
  double a_lo = std::numeric_limits<double>::infinity(), a_hi = 0.0, s_lo = a_lo, s_hi = 0.0;
  for (const auto& row : main.rows) {
    r.csv_rows.push_back((Row() << std::string(row.synthesis ? "synthesis" : "analysis") << row.field << row.s << row.p
                                << row.q << row.ratio << err(row.field, row.ratio))
                             .str());
    auto& lo = row.synthesis ? s_lo : a_lo;
    auto& hi = row.synthesis ? s_hi : a_hi;
    lo = std::min(lo, row.ratio);
    hi = std::max(hi, row.ratio);
  }
  for (const auto& row : side.rows)
    r.csv_rows.push_back((Row() << std::string("synthesis-random") << row.field << row.s << row.p << row.q << row.ratio
                                << err(row.field, row.ratio))
                             .str());

  const auto ind = bapu_independence_check(b, b2, w, fields, ctx.cfg.s, ctx.cfg.p, ctx.cfg.q, BesovScale::Bracket);
  double i_lo = std::numeric_limits<double>::infinity(), i_hi = 0.0;
  for (const auto& row : ind) {
    r.csv_rows.push_back((Row() << std::string("independence") << row.field << row.s << row.p << row.q << row.ratio
                                << err(row.field, row.ratio))
                             .str());
    i_lo = std::min(i_lo, row.ratio);
    i_hi = std::max(i_hi, row.ratio);
  }

  const std::string window = "[" + num(e.lo) + ", " + num(e.hi) + "]";
  r.fact("patches", std::to_string(K));
  r.fact("min denominator", num(b.min_denominator));
  r.fact("cell r0", num(cells.r0));
  r.fact("||Cf||_b / ||f||_B range", num(a_lo) + " .. " + num(a_hi));
  r.fact("||RCf||_B / ||Cf||_b range", num(s_lo) + " .. " + num(s_hi));
  r.fact("random sets ||Rc||_B / ||c||_b range", num(side.min_ratio) + " .. " + num(side.max_ratio));
  r.fact("BAPU independence range", num(i_lo) + " .. " + num(i_hi));
  r.verdict("coefficient operator: ||Cf||_b / ||f||_B in " + window, a_lo >= e.lo && a_hi <= e.hi,
            num(a_lo) + " .. " + num(a_hi));
  r.verdict("reconstruction on C(ensemble): ||Rc||_B / ||c||_b in " + window, s_lo >= e.lo && s_hi <= e.hi,
            num(s_lo) + " .. " + num(s_hi));
  r.verdict("reconstruction upper bound on random sets: ||Rc||_B / ||c||_b <= " + num(e.hi), side.max_ratio <= e.hi,
            num(side.max_ratio));
  r.verdict("BAPU independence: ratio in [" + num(e.independence_lo) + ", " + num(e.independence_hi) + "]",
            i_lo >= e.independence_lo && i_hi <= e.independence_hi, num(i_lo) + " .. " + num(i_hi));
  return r;
}

inline ExperimentResult run_experiment(const RunContext& ctx, const ExperimentSpec& e) {
  ExperimentResult r;
  if (e.name == "apcheck") r = run_apcheck(ctx, e);
  else if (e.name == "invariance") r = run_invariance(ctx, e);
  else if (e.name == "doubling") r = run_doubling(ctx, e);
  else if (e.name == "rholder") r = run_rholder(ctx, e);
  else if (e.name == "reducing") r = run_reducing(ctx, e);
  else if (e.name == "covering") r = run_covering(ctx, e);
  else if (e.name == "multiplier") r = run_multiplier(ctx, e);
  else if (e.name == "sampling") r = run_sampling(ctx, e);
  else if (e.name == "frame") r = run_frame(ctx, e);
  else if (e.name == "besov") r = run_besov(ctx, e);
  else throw Error(ErrorCode::ConfigInvalid, "unknown experiment " + e.name);
  r.name = e.name;
  return r;
}

// ---------------------------------------------------------------- report

struct RunReport {
  std::string config_hash;
  std::vector<ExperimentResult> results;
  bool passed = true;
  std::string summary;  // text of summary.txt
};

inline std::string table_name(std::size_t i, const std::string& name) {
  std::ostringstream os;
  os << std::setw(2) << std::setfill('0') << i + 1 << "_" << name << ".csv";
  return os.str();
}

// Runs every experiment; an experiment that throws counts as a failed assertion.
inline RunReport run(const ExperimentConfig& cfg) {
  const RunContext ctx(cfg);
  RunReport rep;
  rep.config_hash = cfg.hash;
  std::ostringstream s;
  s << "tool " << kToolVersion << "\n";
  s << "config " << cfg.hash << "\n";
  for (std::size_t i = 0; i < cfg.experiments.size(); ++i) {
    const auto& e = cfg.experiments[i];
    ExperimentResult r;
    try {
      r = run_experiment(ctx, e);
    } catch (const Error& err) {
      r.name = e.name;
      r.verdict("experiment completed", false, err.what());
    }
    s << "\n[" << i + 1 << "] " << r.name << ": " << experiment_summary(r.name) << "\n";
    if (!r.csv_header.empty()) s << "  table " << table_name(i, r.name) << " (" << r.csv_rows.size() << " rows)\n";
    for (const auto& [k, v] : r.facts) s << "  " << k << ": " << v << "\n";
    for (const auto& v : r.verdicts)
      s << "  " << (v.pass ? "PASS" : "FAIL") << "  " << v.claim << (v.detail.empty() ? "" : "  [" + v.detail + "]") << "\n";
    rep.passed = rep.passed && r.passed();
    rep.results.push_back(std::move(r));
  }
  s << "\noverall " << (rep.passed ? "PASS" : "FAIL") << "\n";
  rep.summary = s.str();
  return rep;
}

inline void write_report(const RunReport& rep, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "summary.txt", std::ios::binary);
    out << rep.summary;
  }
  for (std::size_t i = 0; i < rep.results.size(); ++i) {
    const auto& r = rep.results[i];
    if (r.csv_header.empty()) continue;
    std::ofstream out(dir / table_name(i, r.name), std::ios::binary);
    out << r.csv_header << "\n";
    for (const auto& row : r.csv_rows) out << row << "\n";
  }
}

}  // namespace aniso::cli
