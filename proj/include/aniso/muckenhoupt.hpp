#pragma once

#include "aniso/quadrature.hpp"
#include "aniso/weights.hpp"

#include <map>
#include <optional>

namespace aniso {

// Scalar weight seen through a closure: plain weights, slices |W^{1/p} v|^p,
// the norm weight ||W|| and dual slices all share the scalar estimators.
struct ScalarWeightView {
  std::function<double(const Vec&, double)> eval;  // (x, low part of x_1)
  std::vector<DD> breaks;                          // singular levels of the first coordinate
  std::function<bool(const DilationGroup&, const AnisoBall&, double)> integrable_on;  // w^power on the ball
  std::string id;
};

inline ScalarWeightView view_of(const ScalarWeight& w) {
  ScalarWeightView v;
  v.eval = [w](const Vec& x, double lo) { return w(x, lo); };
  v.breaks = w.singular_levels_1d();
  v.integrable_on = [w](const DilationGroup& g, const AnisoBall& b, double power) {
    if (w.locally_integrable(g.dim(), power)) return true;
    if (g.dim() == 1) {
      for (double s : w.singular_points_1d())
        if (contains(g, b, Vec::Constant(1, s))) return false;
      return true;
    }
    return !(w.kind() == ScalarWeight::Kind::RadialPower && contains(g, b, Vec::Zero(g.dim())));
  };
  v.id = w.describe();
  return v;
}

inline ScalarWeightView slice_view(const MatrixWeight& w, const CVec& dir, double p) {
  ScalarWeightView v;
  v.eval = [w, dir, p](const Vec& x, double lo) { return std::pow((w.power(x, 1.0 / p, lo) * dir).norm(), p); };
  v.breaks = w.singular_levels_1d();
  v.id = "slice " + w.describe();
  return v;
}

inline ScalarWeightView norm_view(const MatrixWeight& w) {
  ScalarWeightView v;
  v.eval = [w](const Vec& x, double lo) { return spectral_norm(w.value(x, lo)); };
  v.breaks = w.singular_levels_1d();
  v.id = "norm " + w.describe();
  return v;
}

// W^a at x0, stepping off the singular set if needed.
inline CMat nudged_power(const MatrixWeight& w, const Vec& x0, double a) {
  for (int k = 0;; ++k) {
    try {
      return w.power(x0 + Vec::Constant(x0.size(), k ? 1e-11 * std::pow(10.0, k) * (1.0 + x0.norm()) : 0.0), a);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::SingularWeight || k >= 4) throw;
    }
  }
}

inline ScalarWeightView dual_slice_view(const MatrixWeight& w, const Vec& x0, double p) {
  const double pp = p / (p - 1.0);
  const CMat left = nudged_power(w, x0, 1.0 / p);
  ScalarWeightView v;
  v.eval = [w, left, p, pp](const Vec& t, double lo) {
    return std::pow(spectral_norm(CMat(left * w.power(t, -1.0 / p, lo))), pp);
  };
  v.breaks = w.singular_levels_1d();
  v.id = "dual " + w.describe();
  return v;
}

namespace detail {

// Evaluate f at a node, nudging it off the singular set when the value is not
// a positive finite number.
template <class F>
auto eval_nudged(const F& f, const Vec& x) -> decltype(f(x)) {
  Vec y = x;
  for (int attempt = 0;; ++attempt) {
    try {
      auto v = f(y);
      if constexpr (std::is_same_v<decltype(v), double>) {
        if ((v > 0.0 && std::isfinite(v)) || attempt >= 4) return v;
      } else {
        return v;
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::SingularWeight || attempt >= 4) throw;
    }
    y = x + Vec::Constant(x.size(), 1e-11 * std::pow(10.0, attempt) * (1.0 + x.norm()));
  }
}

inline constexpr int kBatches = 16;

inline double batch_se(const std::vector<double>& b) {
  const double n = static_cast<double>(b.size());
  double mean = 0.0;
  for (double v : b) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : b) var += (v - mean) * (v - mean);
  return std::sqrt(var / (n - 1.0) / n);
}

// Shared driver: value on the rule, error from batches (MC) or the ladder (grid),
// and divergence detection on the ladder.
template <class Compute>
Estimate with_error(const BallQuadrature& quad, Compute&& compute, const std::string& what,
                    const std::vector<DD>& breaks) {
  if (quad.is_monte_carlo()) {
    std::vector<double> batches;
    const double v = compute(quad, &batches, breaks);
    if (!std::isfinite(v)) throw Error(ErrorCode::NonIntegrable, what + ": non-finite average");
    return {v, batches.size() > 1 ? batch_se(batches) : 0.0};
  }
  const double v0 = compute(quad, nullptr, breaks);
  const BallQuadrature c1 = quad.coarser();
  const double v1 = compute(c1, nullptr, breaks);
  const double v2 = compute(c1.coarser(), nullptr, breaks);
  if (!std::isfinite(v0) || (v0 > 1.5 * v1 && v1 > 1.5 * v2 && v1 > 0.0))
    throw Error(ErrorCode::NonIntegrable, what + ": average grows under refinement");
  return {v0, std::abs(v0 - v1) + 1e-13 * std::abs(v0)};
}

inline std::vector<double> node_values(const ScalarWeightView& w, const NodeSet& ns) {
  std::vector<double> v(ns.size());
  for (std::size_t i = 0; i < ns.size(); ++i)
    v[i] = eval_nudged([&](const Vec& y) { return w.eval(y, ns.lo_at(i)); }, Vec(ns.x.col(static_cast<Eigen::Index>(i))));
  return v;
}

}  // namespace detail

// Scalar A_p quantity on one ball; p <= 1 uses the node max of 1/w for the ess-sup.
inline Estimate ap_ball_quantity(const DilationGroup& g, const ScalarWeightView& w, const AnisoBall& b, double p,
                                 const BallQuadrature& quad) {
  if (!(p > 0.0)) throw Error(ErrorCode::InvalidArgument, "p must be positive");
  if (w.integrable_on) {
    const bool ok = w.integrable_on(g, b, 1.0) && (p <= 1.0 || w.integrable_on(g, b, -1.0 / (p - 1.0)));
    if (!ok) throw Error(ErrorCode::NonIntegrable, w.id + " is not integrable on the ball");
  }
  auto compute = [&](const BallQuadrature& q, std::vector<double>* batches, const std::vector<DD>& brk) {
    const NodeSet ns = q.nodes(g, b, brk);
    const auto v = detail::node_values(w, ns);
    const int nb = batches ? detail::kBatches : 1;
    std::vector<double> a(nb, 0.0), c(nb, 0.0), wsum(nb, 0.0);
    double A = 0.0, Cc = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const int k = static_cast<int>(i % nb);
      const double wi = ns.w(static_cast<Eigen::Index>(i));
      const double dual = p > 1.0 ? std::pow(v[i], -1.0 / (p - 1.0)) : 1.0 / v[i];
      A += wi * v[i];
      a[k] += wi * v[i];
      wsum[k] += wi;
      if (p > 1.0) {
        Cc += wi * dual;
        c[k] += wi * dual;
      } else {
        Cc = std::max(Cc, dual);
        c[k] = std::max(c[k], dual);
      }
    }
    auto combine = [p](double avg, double dual) { return p > 1.0 ? avg * std::pow(dual, p - 1.0) : avg * dual; };
    if (batches)
      for (int k = 0; k < nb; ++k)
        batches->push_back(combine(a[k] / wsum[k], p > 1.0 ? c[k] / wsum[k] : c[k]));
    return combine(A, Cc);
  };
  return detail::with_error(quad, compute, "A_p quantity of " + w.id, w.breaks);
}

inline Estimate ap_ball_quantity(const DilationGroup& g, const ScalarWeight& w, const AnisoBall& b, double p,
                                 const BallQuadrature& quad) {
  return ap_ball_quantity(g, view_of(w), b, p, quad);
}

namespace detail {

// Tabulated W^{1/p}(x_i) and W^{-1/p}(t_j); the diagonal mode keeps entries only.
struct PowerTable {
  bool diagonal = false;
  std::vector<Vec> d;
  std::vector<CMat> m;
  std::size_t size() const { return diagonal ? d.size() : m.size(); }
};

inline PowerTable power_table(const MatrixWeight& w, const NodeSet& ns, double a) {
  PowerTable t;
  t.diagonal = w.is_diagonal();
  for (std::size_t i = 0; i < ns.size(); ++i) {
    const Vec x = ns.x.col(static_cast<Eigen::Index>(i));
    const double lo = ns.lo_at(i);
    if (t.diagonal)
      t.d.push_back(eval_nudged([&](const Vec& y) { return w.diagonal_power(y, a, lo); }, x));
    else
      t.m.push_back(eval_nudged([&](const Vec& y) { return w.power(y, a, lo); }, x));
  }
  return t;
}

inline double product_norm(const PowerTable& l, std::size_t i, const PowerTable& r, std::size_t j) {
  if (l.diagonal) return l.d[i].cwiseProduct(r.d[j]).maxCoeff();
  return spectral_norm(CMat(l.m[i] * r.m[j]));
}

}  // namespace detail

// Matrix A_p quantity: p > 1 the double average over independent x and t nodes;
// p <= 1 the max over t nodes of the x average.
inline Estimate ap_ball_quantity(const DilationGroup& g, const MatrixWeight& w, const AnisoBall& b, double p,
                                 const BallQuadrature& quad) {
  if (!(p > 0.0)) throw Error(ErrorCode::InvalidArgument, "p must be positive");
  if (g.dim() == 1) {
    const bool ok = w.locally_integrable(1, 1.0) && (p <= 1.0 || w.locally_integrable(1, -1.0 / (p - 1.0)));
    if (!ok)
      for (double s : w.singular_points_1d())
        if (contains(g, b, Vec::Constant(1, s)))
          throw Error(ErrorCode::NonIntegrable, w.describe() + " is not integrable on the ball");
  }
  const auto breaks = w.singular_levels_1d();
  auto compute = [&](const BallQuadrature& q, std::vector<double>* batches, const std::vector<DD>& brk) {
    const NodeSet xs = q.nodes(g, b, brk, 0);
    const NodeSet ts = q.is_monte_carlo() ? q.nodes(g, b, brk, 1) : xs;
    const auto P = detail::power_table(w, xs, 1.0 / p);
    const auto M = detail::power_table(w, ts, -1.0 / p);
    const std::size_t nx = xs.size(), nt = ts.size();
    const int nb = batches ? detail::kBatches : 1;
    if (p > 1.0) {
      const double pp = p / (p - 1.0);
      std::vector<double> inner(nx * nb, 0.0), isum(nb, 0.0);
      for (std::size_t j = 0; j < nt; ++j) isum[j % nb] += ts.w(static_cast<Eigen::Index>(j));
      std::vector<double> full(nx, 0.0);
      parallel_for(nx, [&](std::size_t i) {
        for (std::size_t j = 0; j < nt; ++j) {
          const double v = ts.w(static_cast<Eigen::Index>(j)) * std::pow(detail::product_norm(P, i, M, j), pp);
          full[i] += v;
          inner[i * nb + j % nb] += v;
        }
      });
      double total = 0.0;
      std::vector<double> bt(nb, 0.0), bw(nb, 0.0);
      for (std::size_t i = 0; i < nx; ++i) {
        const double wi = xs.w(static_cast<Eigen::Index>(i));
        total += wi * std::pow(full[i], p / pp);
        const int k = static_cast<int>(i % nb);
        bt[k] += wi * std::pow(inner[i * nb + k] / isum[k], p / pp);
        bw[k] += wi;
      }
      if (batches)
        for (int k = 0; k < nb; ++k) batches->push_back(std::pow(bt[k] / bw[k], 1.0 / p));
      return std::pow(total, 1.0 / p);
    }
    std::vector<double> col(nt * nb, 0.0), full(nt, 0.0), xsum(nb, 0.0);
    for (std::size_t i = 0; i < nx; ++i) xsum[i % nb] += xs.w(static_cast<Eigen::Index>(i));
    parallel_for(nt, [&](std::size_t j) {
      for (std::size_t i = 0; i < nx; ++i) {
        const double v = xs.w(static_cast<Eigen::Index>(i)) * std::pow(detail::product_norm(P, i, M, j), p);
        full[j] += v;
        col[j * nb + i % nb] += v;
      }
    });
    double best = 0.0;
    std::vector<double> bb(nb, 0.0);
    for (std::size_t j = 0; j < nt; ++j) {
      best = std::max(best, full[j]);
      const int k = static_cast<int>(j % nb);
      bb[k] = std::max(bb[k], col[j * nb + k] / xsum[k]);
    }
    if (batches) *batches = bb;
    return best;
  };
  return detail::with_error(quad, compute, "matrix A_p quantity of " + w.describe(), breaks);
}

struct BallFamily {
  std::vector<AnisoBall> balls;
  std::string descriptor;
};

inline BallFamily centered_family(int d, int m_lo = -3, int m_hi = 3) {
  BallFamily f;
  for (int m = m_lo; m <= m_hi; ++m) f.balls.push_back({Vec::Zero(d), std::ldexp(1.0, m)});
  f.descriptor = "centered, radii 2^m for m in [" + std::to_string(m_lo) + "," + std::to_string(m_hi) + "]";
  return f;
}

// Centers on the lattice spacing*Z^d with |c|_A <= max_center_norm, radii 2^m.
// Default spacing: 1 in d = 1, otherwise max_center_norm^{lambda_i}/4 per eigen-axis.
inline BallFamily lattice_family(const DilationGroup& g, double max_center_norm = 8.0, int m_lo = -3, int m_hi = 3,
                                 Vec spacing = Vec()) {
  const int d = g.dim();
  if (spacing.size() == 0) {
    spacing = Vec::Ones(d);
    if (d > 1)
      for (int i = 0; i < d; ++i) spacing(i) = std::pow(max_center_norm, g.generator()(i, i)) / 4.0;
  }
  Vec ext(d);
  for (int i = 0; i < d; ++i) ext(i) = std::max(std::pow(max_center_norm, g.alpha1()), std::pow(max_center_norm, g.alpha2()));
  std::vector<int> lo(d), hi(d), idx(d);
  for (int i = 0; i < d; ++i) {
    hi[i] = static_cast<int>(std::floor(ext(i) / spacing(i)));
    lo[i] = -hi[i];
    idx[i] = lo[i];
  }
  BallFamily f;
  for (;;) {
    Vec c(d);
    for (int i = 0; i < d; ++i) c(i) = idx[i] * spacing(i);
    if (g.quasi_norm(c) <= max_center_norm * (1.0 + 1e-12))
      for (int m = m_lo; m <= m_hi; ++m) f.balls.push_back({c, std::ldexp(1.0, m)});
    int i = 0;
    while (i < d && ++idx[i] > hi[i]) idx[i] = lo[i], ++i;
    if (i == d) break;
  }
  std::ostringstream os;
  os << "lattice spacing (";
  for (int i = 0; i < d; ++i) os << (i ? "," : "") << spacing(i);
  os << "), |c|_A <= " << max_center_norm << ", radii 2^m for m in [" << m_lo << "," << m_hi << "]";
  f.descriptor = os.str();
  return f;
}

struct BallRow {
  AnisoBall ball;
  double value = 0.0;
  double error = 0.0;
};

struct ApReport {
  std::string weight_id;
  double p = 2.0;
  std::vector<BallRow> rows;
  double constant = 0.0;
  std::size_t argmax = 0;
  std::string family;
  std::string quadrature;
  std::string norm = "spectral";
};

namespace detail {

template <class W>
ApReport family_report(const DilationGroup& g, const W& w, double p, const BallFamily& fam, const BallQuadrature& quad,
                       const std::string& id) {
  if (fam.balls.empty()) throw Error(ErrorCode::InvalidArgument, "ball family is empty");
  ApReport r;
  r.weight_id = id;
  r.p = p;
  r.family = fam.descriptor;
  r.quadrature = quad.descriptor();
  r.rows.resize(fam.balls.size());
  std::vector<std::string> fail(fam.balls.size());
  parallel_for(fam.balls.size(), [&](std::size_t i) {
    try {
      const Estimate e = ap_ball_quantity(g, w, fam.balls[i], p, quad);
      r.rows[i] = {fam.balls[i], e.value, e.error};
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NonIntegrable) throw;
      std::ostringstream os;
      os << e.what() << " (ball center " << fam.balls[i].center.transpose() << ", radius " << fam.balls[i].radius
         << ")";
      fail[i] = os.str();
    }
  });
  for (const auto& f : fail)
    if (!f.empty()) throw Error(ErrorCode::NonIntegrable, f);
  for (std::size_t i = 0; i < r.rows.size(); ++i)
    if (r.rows[i].value > r.constant) r.constant = r.rows[i].value, r.argmax = i;
  return r;
}

}  // namespace detail

// Max over the family: a lower bound for the supremum over all balls.
inline ApReport estimate_ap_constant(const DilationGroup& g, const MatrixWeight& w, double p, const BallFamily& fam,
                                     const BallQuadrature& quad) {
  return detail::family_report(g, w, p, fam, quad, w.describe());
}

inline ApReport estimate_ap_constant(const DilationGroup& g, const ScalarWeight& w, double p, const BallFamily& fam,
                                     const BallQuadrature& quad) {
  return detail::family_report(g, view_of(w), p, fam, quad, w.describe());
}

inline ApReport estimate_ap_constant(const DilationGroup& g, const ScalarWeightView& w, double p, const BallFamily& fam,
                                     const BallQuadrature& quad) {
  return detail::family_report(g, w, p, fam, quad, w.id);
}

// A_p report of t -> |W^{1/p}(t) v|^p (A_1 when p <= 1).
inline ApReport scalar_slice_ap(const DilationGroup& g, const MatrixWeight& w, double p, const CVec& v,
                                const BallFamily& fam, const BallQuadrature& quad) {
  if (v.norm() == 0.0) throw Error(ErrorCode::InvalidArgument, "slice direction must be nonzero");
  return estimate_ap_constant(g, slice_view(w, v, p), std::max(1.0, p), fam, quad);
}

using VectorField = std::function<CVec(const Vec&)>;

// Lower bound for the norm of f -> 1_B avg_B f on L^p(W), with f restricted to B.
inline double averaging_operator_check(const DilationGroup& g, const MatrixWeight& w, const AnisoBall& b, double p,
                                       const BallQuadrature& quad, const std::vector<VectorField>& fields) {
  if (!(p > 1.0)) throw Error(ErrorCode::InvalidArgument, "averaging check needs p > 1");
  const NodeSet ns = quad.nodes(g, b, w.singular_levels_1d());
  std::vector<CMat> P(ns.size());
  for (std::size_t i = 0; i < ns.size(); ++i)
    P[i] = detail::eval_nudged([&](const Vec& y) { return w.power(y, 1.0 / p, ns.lo_at(i)); },
                               Vec(ns.x.col(static_cast<Eigen::Index>(i))));
  double best = 0.0;
  for (const auto& f : fields) {
    CVec mean = CVec::Zero(w.size());
    std::vector<CVec> vals(ns.size());
    for (std::size_t i = 0; i < ns.size(); ++i) {
      vals[i] = f(ns.x.col(static_cast<Eigen::Index>(i)));
      mean += ns.w(static_cast<Eigen::Index>(i)) * vals[i];
    }
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < ns.size(); ++i) {
      const double wi = ns.w(static_cast<Eigen::Index>(i));
      num += wi * std::pow((P[i] * mean).norm(), p);
      den += wi * std::pow((P[i] * vals[i]).norm(), p);
    }
    if (den > 0.0) best = std::max(best, std::pow(num / den, 1.0 / p));
  }
  return best;
}

struct DoublingRow {
  AnisoBall ball;
  double lambda = 1.0;
  std::string variant;
  double ratio = 0.0;
  double error = 0.0;
  double bound = 0.0;
};

struct DoublingReport {
  std::string weight_id;
  std::vector<DoublingRow> rows;
  std::map<std::string, double> fitted_beta;
  std::map<std::string, double> constant;  // family max of the A_p quantity per variant
  double nu_p = 0.0;
  bool within_bound = true;
  bool ratios_at_least_one = true;
};

namespace detail {

inline Estimate mean_value(const DilationGroup& g, const ScalarWeightView& w, const AnisoBall& b,
                           const BallQuadrature& quad) {
  auto compute = [&](const BallQuadrature& q, std::vector<double>* batches, const std::vector<DD>& brk) {
    const NodeSet ns = q.nodes(g, b, brk);
    const auto v = node_values(w, ns);
    const int nb = batches ? kBatches : 1;
    std::vector<double> a(nb, 0.0), s(nb, 0.0);
    double m = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double wi = ns.w(static_cast<Eigen::Index>(i));
      m += wi * v[i];
      a[i % nb] += wi * v[i];
      s[i % nb] += wi;
    }
    if (batches)
      for (int k = 0; k < nb; ++k) batches->push_back(a[k] / s[k]);
    return m;
  };
  return with_error(quad, compute, "average of " + w.id, w.breaks);
}

inline void doubling_variant(const DilationGroup& g, const ScalarWeightView& w, double p_eff, const std::string& name,
                             const BallFamily& fam, const std::vector<double>& lambdas, const BallQuadrature& quad,
                             double tol, DoublingReport& rep) {
  std::vector<DoublingRow> rows(fam.balls.size() * lambdas.size());
  std::vector<double> q(rows.size());
  parallel_for(fam.balls.size(), [&](std::size_t i) {
    const AnisoBall& b = fam.balls[i];
    const Estimate base = mean_value(g, w, b, quad);
    for (std::size_t k = 0; k < lambdas.size(); ++k) {
      const double lam = lambdas[k];
      const AnisoBall big{b.center, b.radius * lam};
      const Estimate m = mean_value(g, w, big, quad);
      const double vol = std::pow(lam, g.nu());
      const double ratio = vol * m.value / base.value;
      const double err = vol * (m.error / base.value + m.value * base.error / (base.value * base.value));
      const double qv = ap_ball_quantity(g, w, big, p_eff, quad).value;
      q[i * lambdas.size() + k] = qv;
      rows[i * lambdas.size() + k] = {b, lam, name, ratio, err,
                                      qv * std::pow(lam, g.nu() * std::max(1.0, p_eff)) * (1.0 + tol)};
    }
  });
  double cst = 0.0;
  for (double v : q) cst = std::max(cst, v);
  rep.constant[name] = cst;
  std::vector<double> lx, ly;
  for (std::size_t k = 0; k < lambdas.size(); ++k) {
    double mx = 0.0;
    for (std::size_t i = 0; i < fam.balls.size(); ++i) mx = std::max(mx, rows[i * lambdas.size() + k].ratio);
    if (lambdas[k] > 1.0) {
      lx.push_back(std::log(lambdas[k]));
      ly.push_back(std::log(mx));
    }
  }
  // slope through the origin: ratio is 1 at lambda = 1
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t k = 0; k < lx.size(); ++k) sxy += lx[k] * ly[k], sxx += lx[k] * lx[k];
  rep.fitted_beta[name] = sxx > 0.0 ? sxy / sxx : 0.0;
  for (const auto& r : rows) {
    if (r.ratio > r.bound + 2.0 * r.error) rep.within_bound = false;
    if (r.lambda >= 1.0 && r.ratio < 1.0 - 2.0 * r.error - 1e-12) rep.ratios_at_least_one = false;
  }
  rep.rows.insert(rep.rows.end(), rows.begin(), rows.end());
}

}  // namespace detail

inline DoublingReport doubling_check(const DilationGroup& g, const ScalarWeight& w, double p, const BallFamily& fam,
                                     const std::vector<double>& lambdas, const BallQuadrature& quad,
                                     double tol = 1e-6) {
  for (double l : lambdas)
    if (!(l >= 1.0)) throw Error(ErrorCode::InvalidArgument, "doubling factors must be >= 1");
  DoublingReport rep;
  rep.weight_id = w.describe();
  rep.nu_p = g.nu() * p;
  detail::doubling_variant(g, view_of(w), p, "scalar", fam, lambdas, quad, tol, rep);
  return rep;
}

// Matrix weight: slice along v (default e_1), the norm weight, and for p > 1 the
// dual slice anchored at each ball center.
inline DoublingReport doubling_check(const DilationGroup& g, const MatrixWeight& w, double p, const BallFamily& fam,
                                     const std::vector<double>& lambdas, const BallQuadrature& quad,
                                     std::optional<CVec> v = std::nullopt, double tol = 1e-6) {
  for (double l : lambdas)
    if (!(l >= 1.0)) throw Error(ErrorCode::InvalidArgument, "doubling factors must be >= 1");
  DoublingReport rep;
  rep.weight_id = w.describe();
  rep.nu_p = g.nu() * p;
  CVec dir = v ? *v : CVec(CVec::Unit(w.size(), 0));
  detail::doubling_variant(g, slice_view(w, dir, p), std::max(1.0, p), "slice", fam, lambdas, quad, tol, rep);
  detail::doubling_variant(g, norm_view(w), std::max(1.0, p), "norm", fam, lambdas, quad, tol, rep);
  if (p > 1.0) {
    const double pp = p / (p - 1.0);
    for (std::size_t i = 0; i < fam.balls.size(); ++i) {
      BallFamily one{{fam.balls[i]}, fam.descriptor};
      DoublingReport part;
      detail::doubling_variant(g, dual_slice_view(w, fam.balls[i].center, p), pp, "dual", one, lambdas, quad, tol,
                               part);
      rep.rows.insert(rep.rows.end(), part.rows.begin(), part.rows.end());
      rep.within_bound = rep.within_bound && part.within_bound;
      rep.ratios_at_least_one = rep.ratios_at_least_one && part.ratios_at_least_one;
      rep.constant["dual"] = std::max(rep.constant["dual"], part.constant["dual"]);
    }
    std::vector<double> lx, ly;
    for (double lam : lambdas) {
      if (lam <= 1.0) continue;
      double mx = 0.0;
      for (const auto& r : rep.rows)
        if (r.variant == "dual" && r.lambda == lam) mx = std::max(mx, r.ratio);
      lx.push_back(std::log(lam));
      ly.push_back(std::log(mx));
    }
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t k = 0; k < lx.size(); ++k) sxy += lx[k] * ly[k], sxx += lx[k] * lx[k];
    rep.fitted_beta["dual"] = sxx > 0.0 ? sxy / sxx : 0.0;
  }
  return rep;
}

struct ReverseHolderResult {
  bool found = false;
  double r_best = 1.0;
  double c1 = 0.0;
  std::vector<std::pair<double, double>> table;  // (r, max ratio); infinity when divergent
};

// Largest r in the grid with max_B (avg w^r)^{1/r} / avg w <= cap.
inline ReverseHolderResult reverse_holder_search(const DilationGroup& g, const ScalarWeight& w, const BallFamily& fam,
                                                 const std::vector<double>& r_grid, const BallQuadrature& quad,
                                                 double cap = 1.2) {
  const ScalarWeightView base = view_of(w);
  for (const auto& b : fam.balls)
    if (!base.integrable_on(g, b, 1.0)) throw Error(ErrorCode::NonIntegrable, w.describe() + " is not integrable");
  ReverseHolderResult res;
  int divergent = 0;
  for (double r : r_grid) {
    if (!(r > 1.0)) throw Error(ErrorCode::InvalidArgument, "reverse Holder exponents must exceed 1");
    ScalarWeightView pw = base;
    pw.eval = [w, r](const Vec& x, double lo) { return std::pow(w(x, lo), r); };
    pw.id = base.id + "^" + std::to_string(r);
    std::vector<double> ratio(fam.balls.size(), 0.0);
    bool diverged = false;
    for (const auto& b : fam.balls)
      if (!base.integrable_on(g, b, r)) diverged = true;
    if (!diverged) {
      try {
        parallel_for(fam.balls.size(), [&](std::size_t i) {
          const double a = detail::mean_value(g, base, fam.balls[i], quad).value;
          const double ar = detail::mean_value(g, pw, fam.balls[i], quad).value;
          ratio[i] = std::pow(ar, 1.0 / r) / a;
        });
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NonIntegrable) throw;
        diverged = true;
      }
    }
    const double c = diverged ? std::numeric_limits<double>::infinity() : *std::max_element(ratio.begin(), ratio.end());
    if (diverged) ++divergent;
    res.table.emplace_back(r, c);
    if (c <= cap && r > res.r_best) {
      res.found = true;
      res.r_best = r;
      res.c1 = c;
    }
  }
  if (divergent == static_cast<int>(r_grid.size()) && !r_grid.empty())
    throw Error(ErrorCode::NonIntegrable, "w^r diverges for every grid exponent");
  return res;
}

struct ReducingPair {
  AnisoBall ball;
  double p = 2.0;
  CMat a;        // A_B
  CMat a_sharp;  // A_B^#
  double distortion = 1.0;
  double distortion_sharp = 1.0;
  double product_norm = 1.0;  // ||A_B A_B^#||
  bool degenerate = false;
  std::vector<std::pair<double, double>> pa1;  // (q, avg ||W^{1/p} A^#||^q)
  std::vector<std::pair<double, double>> pa2;  // (q, avg ||A W^{-1/p}||^q)
  double largest_passing_q = 0.0;
};

namespace detail {

inline std::vector<CVec> sphere_directions(int n_dim, int count, bool complex_dirs) {
  std::vector<CVec> dirs;
  if (n_dim == 1) return {CVec::Ones(1)};
  if (!complex_dirs && n_dim == 2) {
    for (int k = 0; k < count; ++k) {
      const double a = std::numbers::pi * k / count;
      CVec u(2);
      u << std::cos(a), std::sin(a);
      dirs.push_back(u);
    }
    return dirs;
  }
  Rng rng(0x5eed);
  for (int k = 0; k < count; ++k) {
    CVec u(n_dim);
    for (int i = 0; i < n_dim; ++i) u(i) = complex_dirs ? cplx(rng.normal(), rng.normal()) : cplx(rng.normal(), 0.0);
    dirs.push_back(u / u.norm());
  }
  return dirs;
}

inline CMat hermitian_power(const CMat& g, double a) {
  Eigen::SelfAdjointEigenSolver<CMat> es(g);
  Vec ev = es.eigenvalues();
  CVec p(ev.size());
  for (int i = 0; i < ev.size(); ++i) p(i) = std::pow(std::max(ev(i), 1e-300), a);
  return es.eigenvectors() * p.asDiagonal() * es.eigenvectors().adjoint();
}

// Hermitian G with u* G u ~ eta(u)^2: relative linear least squares, then
// Gauss-Newton on log residuals with a positive-definite safeguard.
inline CMat fit_gram(const std::vector<CVec>& dirs, const std::vector<double>& eta) {
  const int n = static_cast<int>(dirs[0].size());
  const int np = n * n;
  auto features = [n, np](const CVec& u) {
    Vec f(np);
    int k = 0;
    for (int i = 0; i < n; ++i) f(k++) = std::norm(u(i));
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        const cplx z = std::conj(u(i)) * u(j);
        f(k++) = 2.0 * z.real();   // coefficient of Re G_ij
        f(k++) = -2.0 * z.imag();  // coefficient of Im G_ij
      }
    return f;
  };
  auto assemble = [n](const Vec& th) {
    CMat g = CMat::Zero(n, n);
    int k = 0;
    for (int i = 0; i < n; ++i) g(i, i) = th(k++);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        g(i, j) = cplx(th(k), th(k + 1));
        g(j, i) = std::conj(g(i, j));
        k += 2;
      }
    return g;
  };
  const int m = static_cast<int>(dirs.size());
  Mat F(m, np);
  Vec y(m);
  for (int k = 0; k < m; ++k) {
    const double s = 1.0 / (eta[k] * eta[k]);
    F.row(k) = features(dirs[k]).transpose() * s;
    y(k) = 1.0;
  }
  Vec th = F.completeOrthogonalDecomposition().solve(y);
  auto pd_fix = [&](Vec& t) {
    CMat g = assemble(t);
    Eigen::SelfAdjointEigenSolver<CMat> es(g);
    const double top = std::max(es.eigenvalues().maxCoeff(), 1e-300);
    if (es.eigenvalues().minCoeff() > 1e-12 * top) return g;
    Vec ev = es.eigenvalues().cwiseMax(1e-12 * top);
    g = es.eigenvectors() * ev.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
    int k = 0;
    for (int i = 0; i < n; ++i) t(k++) = g(i, i).real();
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) t(k++) = g(i, j).real(), t(k++) = g(i, j).imag();
    return g;
  };
  pd_fix(th);
  Mat Fr(m, np);
  for (int k = 0; k < m; ++k) Fr.row(k) = features(dirs[k]).transpose();
  auto objective = [&](const Vec& t, Vec* res) {
    Vec q = Fr * t;
    double s = 0.0;
    for (int k = 0; k < m; ++k) {
      if (!(q(k) > 0.0)) return std::numeric_limits<double>::infinity();
      const double r = 0.5 * std::log(q(k)) - std::log(eta[k]);
      if (res) (*res)(k) = r;
      s += r * r;
    }
    return s;
  };
  Vec res(m);
  double obj = objective(th, &res);
  for (int it = 0; it < 30 && obj > 1e-28; ++it) {
    const Vec q = Fr * th;
    Mat J(m, np);
    for (int k = 0; k < m; ++k) J.row(k) = 0.5 * Fr.row(k) / q(k);
    const Vec step = J.completeOrthogonalDecomposition().solve(-res);
    double alpha = 1.0;
    bool improved = false;
    for (int ls = 0; ls < 30; ++ls, alpha *= 0.5) {
      Vec cand = th + alpha * step;
      Vec cres(m);
      const double co = objective(cand, &cres);
      if (co < obj) {
        Eigen::SelfAdjointEigenSolver<CMat> es(assemble(cand));
        if (es.eigenvalues().minCoeff() <= 0.0) continue;
        th = cand;
        res = cres;
        obj = co;
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }
  return pd_fix(th);
}

}  // namespace detail

inline ReducingPair reducing_operators(const DilationGroup& g, const MatrixWeight& w, const AnisoBall& b, double p,
                                       const BallQuadrature& quad, int n_directions = 0,
                                       std::vector<double> q_grid = {}, double fit_tol = 0.05,
                                       double pa_factor = 4.0) {
  if (!(p > 1.0)) throw Error(ErrorCode::InvalidArgument, "reducing operators are computed for p > 1");
  const int N = w.size();
  const double pp = p / (p - 1.0);
  const int count = std::max(n_directions, 2 * N * N);
  const NodeSet ns = quad.nodes(g, b, w.singular_levels_1d());
  std::vector<CMat> Pp(ns.size()), Pm(ns.size());
  bool complex_w = false;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    const Vec x = ns.x.col(static_cast<Eigen::Index>(i));
    const double lo = ns.lo_at(i);
    Pp[i] = detail::eval_nudged([&](const Vec& y) { return w.power(y, 1.0 / p, lo); }, x);
    Pm[i] = detail::eval_nudged([&](const Vec& y) { return w.power(y, -1.0 / p, lo); }, x);
    complex_w = complex_w || Pp[i].imag().cwiseAbs().maxCoeff() > 1e-14;
  }
  const auto dirs = detail::sphere_directions(N, count, complex_w);
  std::vector<double> eta(dirs.size()), etas(dirs.size());
  for (std::size_t k = 0; k < dirs.size(); ++k) {
    double s = 0.0, t = 0.0;
    for (std::size_t i = 0; i < ns.size(); ++i) {
      const double wi = ns.w(static_cast<Eigen::Index>(i));
      s += wi * std::pow((Pp[i] * dirs[k]).norm(), p);
      t += wi * std::pow((Pm[i] * dirs[k]).norm(), pp);
    }
    eta[k] = std::pow(s, 1.0 / p);
    etas[k] = std::pow(t, 1.0 / pp);
  }
  ReducingPair r;
  r.ball = b;
  r.p = p;
  // at p = 2 eta^2 is exactly a quadratic form, so the linear stage is exact
  r.a = detail::hermitian_power(detail::fit_gram(dirs, eta), 0.5);
  r.a_sharp = detail::hermitian_power(detail::fit_gram(dirs, etas), 0.5);
  auto distortion = [&](const CMat& a, const std::vector<double>& e) {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (std::size_t k = 0; k < dirs.size(); ++k) {
      const double q = (a * dirs[k]).norm() / e[k];
      lo = std::min(lo, q);
      hi = std::max(hi, q);
    }
    return hi / lo;
  };
  r.distortion = distortion(r.a, eta);
  r.distortion_sharp = distortion(r.a_sharp, etas);
  r.degenerate = std::max(r.distortion, r.distortion_sharp) > std::sqrt(static_cast<double>(N)) * (1.0 + fit_tol);
  r.product_norm = spectral_norm(CMat(r.a * r.a_sharp));
  if (q_grid.empty()) q_grid = {p + 0.25, p + 0.5, p + 0.75, p + 1.0};
  const NodeSet fine = quad.refined().nodes(g, b, w.singular_levels_1d(), 2);
  for (double q : q_grid) {
    if (!(q > p && q <= p + 1.0)) throw Error(ErrorCode::InvalidArgument, "q-grid must lie in (p, p+1]");
    auto averages = [&](const NodeSet& set) {
      double s1 = 0.0, s2 = 0.0;
      for (std::size_t i = 0; i < set.size(); ++i) {
        const Vec x = set.x.col(static_cast<Eigen::Index>(i));
        const double wi = set.w(static_cast<Eigen::Index>(i)), lo = set.lo_at(i);
        const CMat up = detail::eval_nudged([&](const Vec& y) { return w.power(y, 1.0 / p, lo); }, x);
        const CMat dn = detail::eval_nudged([&](const Vec& y) { return w.power(y, -1.0 / p, lo); }, x);
        s1 += wi * std::pow(spectral_norm(CMat(up * r.a_sharp)), q);
        s2 += wi * std::pow(spectral_norm(CMat(r.a * dn)), q);
      }
      return std::pair{s1, s2};
    };
    const auto [a1, a2] = averages(ns);
    const auto [f1, f2] = averages(fine);
    r.pa1.emplace_back(q, a1);
    r.pa2.emplace_back(q, a2);
    const double limit = std::pow(pa_factor * r.product_norm, q);
    const bool stable = std::abs(f1 - a1) <= 0.5 * a1 && std::abs(f2 - a2) <= 0.5 * a2;
    if (std::isfinite(a1) && std::isfinite(a2) && stable && a1 <= limit && a2 <= limit)
      r.largest_passing_q = std::max(r.largest_passing_q, q);
  }
  return r;
}

struct InvarianceRow {
  AnisoBall ball;
  double lhs = 0.0, lhs_error = 0.0;  // quantity of W o T on B
  double rhs = 0.0, rhs_error = 0.0;  // quantity of W on T(B)
  double discrepancy = 0.0;
};

struct InvarianceReport {
  std::vector<InvarianceRow> rows;
  double max_discrepancy = 0.0;
  bool within_error = true;  // every discrepancy <= 2 * combined error
};

template <class W>
InvarianceReport invariance_check(const DilationGroup& g, const W& w, double p, const AffineMap& t,
                                  const BallFamily& fam, const BallQuadrature& quad_a, const BallQuadrature& quad_b) {
  const W pulled = w.pullback(t.matrix(g), t.shift);
  InvarianceReport rep;
  rep.rows.resize(fam.balls.size());
  parallel_for(fam.balls.size(), [&](std::size_t i) {
    const AnisoBall& b = fam.balls[i];
    const Estimate l = ap_ball_quantity(g, pulled, b, p, quad_a);
    const Estimate r = ap_ball_quantity(g, w, map_ball(g, t, b), p, quad_b);
    rep.rows[i] = {b, l.value, l.error, r.value, r.error, std::abs(l.value - r.value)};
  });
  for (const auto& r : rep.rows) {
    rep.max_discrepancy = std::max(rep.max_discrepancy, r.discrepancy);
    if (r.discrepancy > 2.0 * (r.lhs_error + r.rhs_error)) rep.within_error = false;
  }
  return rep;
}

struct TailBoundResult {
  double ratio = 0.0;     // int w (1 + t|x - x_l|)^{-L} / int_{U} w
  double bound = 0.0;     // 1 + sum_m (1 + 2^{m-1} r0)^{-L} c' 2^{m beta}
  double geometric = 0.0; // sum_m 2^{(beta - L) m}
  double doubling_constant = 0.0;  // measured c'
  int depth = 0;
  bool converged = false;
};

// Annulus decomposition around x = delta_{t}^{-1} l with R_0 = B_A(x, r0/t).
inline TailBoundResult weighted_tail_bound(const DilationGroup& g, const ScalarWeight& w, double beta, double t_j,
                                           const Vec& ell, double L, double r0, int max_depth = 60, double tol = 1e-7,
                                           int nodes = 24) {
  if (!(L > beta)) throw Error(ErrorCode::InvalidArgument, "tail bound needs L > beta");
  const Vec x0 = g.dilate(1.0 / t_j, ell);
  const double rho = r0 / t_j;
  const auto breaks = w.singular_points_1d();
  auto integrate = [&](double lo, double hi, bool kernel) {
    const NodeSet ns = annulus_nodes(g, x0, lo, hi, nodes, breaks);
    double s = 0.0;
    for (std::size_t i = 0; i < ns.size(); ++i) {
      const Vec x = ns.x.col(static_cast<Eigen::Index>(i));
      double v = detail::eval_nudged([&](const Vec& y) { return w(y); }, x);
      if (kernel) v *= std::pow(1.0 + t_j * g.quasi_norm(x - x0), -L);
      s += ns.w(static_cast<Eigen::Index>(i)) * v;
    }
    return s;
  };
  TailBoundResult res;
  const double base = integrate(0.0, rho, false);
  double total = integrate(0.0, rho, true);
  double mass = base;
  double cprime = 1.0;
  std::vector<double> masses{base};
  for (int m = 1; m <= max_depth; ++m) {
    const double lo = std::ldexp(rho, m - 1), hi = std::ldexp(rho, m);
    const double inc = integrate(lo, hi, true);
    mass += integrate(lo, hi, false);
    masses.push_back(mass);
    cprime = std::max(cprime, mass / (std::pow(2.0, m * beta) * base));
    total += inc;
    res.depth = m;
    if (inc <= tol * total && m >= 4) {
      res.converged = true;
      break;
    }
  }
  if (!res.converged) throw Error(ErrorCode::TruncationNotConverged, "annulus partial sums not Cauchy at depth cap");
  res.ratio = total / base;
  res.doubling_constant = cprime;
  res.bound = 1.0;
  for (int m = 1; m <= res.depth + 200; ++m) {
    res.bound += std::pow(1.0 + std::ldexp(r0, m - 1), -L) * cprime * std::pow(2.0, m * beta);
    res.geometric += std::pow(2.0, (beta - L) * m);
  }
  res.geometric += 1.0;
  return res;
}

}  // namespace aniso
