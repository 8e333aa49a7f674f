#pragma once

#include "aniso/geometry.hpp"

#include <sstream>

namespace aniso {

// Nodes as columns of x; weights sum to one for ball rules and carry the
// measure for annulus rules.
struct NodeSet {
  Mat x;
  Vec w;
  Vec lo;  // low part of the first coordinate per node; empty when all zero
  std::size_t size() const { return static_cast<std::size_t>(w.size()); }
  double lo_at(std::size_t i) const { return lo.size() ? lo(static_cast<Eigen::Index>(i)) : 0.0; }
};

namespace detail {

// Offsets from the singular end of a graded piece, kept exactly so callers can
// rebuild nodes near a singular point without cancellation. anchor is NaN on
// ungraded pieces.
struct GradedNodes {
  std::vector<double> x, w, anchor, off;
};

// Gauss-Legendre nodes on [a,b] graded toward singular ends: x = a + (b-a) s^k.
inline void interval_piece(double a, double b, bool sing_a, bool sing_b, int m, GradedNodes& out, int grade = 8) {
  if (!(b > a)) return;
  if (sing_a && sing_b) {
    const double mid = 0.5 * (a + b);
    interval_piece(a, mid, true, false, m, out, grade);
    interval_piece(mid, b, false, true, m, out, grade);
    return;
  }
  const GaussRule& gl = cached_gauss_legendre(m);
  for (int i = 0; i < m; ++i) {
    const double s = 0.5 * (gl.nodes(i) + 1.0), ws0 = 0.5 * gl.weights(i);
    if (sing_a || sing_b) {
      const double h = (b - a) * std::pow(s, grade);
      out.x.push_back(sing_a ? a + h : b - h);
      out.anchor.push_back(sing_a ? a : b);
      out.off.push_back(sing_a ? h : -h);
      out.w.push_back(ws0 * (b - a) * grade * std::pow(s, grade - 1));
    } else {
      out.x.push_back(a + (b - a) * s);
      out.anchor.push_back(std::numeric_limits<double>::quiet_NaN());
      out.off.push_back(0.0);
      out.w.push_back(ws0 * (b - a));
    }
  }
}

inline void interval_piece(double a, double b, bool sing_a, bool sing_b, int m, std::vector<double>& xs,
                           std::vector<double>& ws, int grade = 8) {
  GradedNodes g;
  interval_piece(a, b, sing_a, sing_b, m, g, grade);
  xs.insert(xs.end(), g.x.begin(), g.x.end());
  ws.insert(ws.end(), g.w.begin(), g.w.end());
}

// Rule on [a,b] split at the singular levels inside it; levels on the ends grade those ends.
inline void interval_rule(double a, double b, const std::vector<double>& breaks, int m, GradedNodes& out) {
  std::vector<double> cuts{a};
  for (double s : breaks)
    if (s > a && s < b) cuts.push_back(s);
  cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  const auto is_break = [&](double v) { return std::find(breaks.begin(), breaks.end(), v) != breaks.end(); };
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
    interval_piece(cuts[i], cuts[i + 1], is_break(cuts[i]), is_break(cuts[i + 1]), m, out);
}

inline void interval_rule(double a, double b, const std::vector<double>& breaks, int m, std::vector<double>& xs,
                          std::vector<double>& ws) {
  GradedNodes g;
  interval_rule(a, b, breaks, m, g);
  xs.insert(xs.end(), g.x.begin(), g.x.end());
  ws.insert(ws.end(), g.w.begin(), g.w.end());
}

}  // namespace detail

class BallQuadrature {
 public:
  enum class Rule { MonteCarlo, MappedGrid };

  static BallQuadrature monte_carlo(std::size_t n, std::uint64_t seed) {
    if (n < 64) throw Error(ErrorCode::InvalidArgument, "quadrature needs at least 64 nodes");
    BallQuadrature q;
    q.rule_ = Rule::MonteCarlo;
    q.count_ = n;
    q.seed_ = seed;
    return q;
  }
  static BallQuadrature mapped_grid(int per_axis) {
    if (per_axis < 8) throw Error(ErrorCode::InvalidArgument, "mapped grid needs at least 8 nodes per axis");
    BallQuadrature q;
    q.rule_ = Rule::MappedGrid;
    q.per_axis_ = per_axis;
    return q;
  }

  Rule rule() const { return rule_; }
  bool is_monte_carlo() const { return rule_ == Rule::MonteCarlo; }
  std::size_t count() const { return count_; }
  int per_axis() const { return per_axis_; }
  std::uint64_t seed() const { return seed_; }

  // Next rung of the refinement ladder (fewer nodes).
  BallQuadrature coarser() const {
    BallQuadrature q = *this;
    if (rule_ == Rule::MappedGrid)
      q.per_axis_ = std::max(4, per_axis_ / 2);
    else
      q.count_ = std::max<std::size_t>(16, count_ / 4);
    return q;
  }

  BallQuadrature refined() const {
    BallQuadrature q = *this;
    if (rule_ == Rule::MappedGrid)
      q.per_axis_ = per_axis_ * 2;
    else
      q.count_ = count_ * 4;
    return q;
  }

  std::string descriptor() const {
    std::ostringstream os;
    if (rule_ == Rule::MonteCarlo)
      os << "monte_carlo(n=" << count_ << ",seed=" << seed_ << ")";
    else
      os << "mapped_grid(per_axis=" << per_axis_ << ")";
    return os.str();
  }

  // Nodes on B_A(center, r): x = delta_r u + center with u in the reference ball.
  // `breaks` are singular levels of the first coordinate (used by grid rules when
  // the dilation is diagonal); `stream` selects an independent MC node set.
  NodeSet nodes(const DilationGroup& g, const AnisoBall& b, const std::vector<double>& breaks = {},
                std::uint64_t stream = 0) const {
    std::vector<DD> levels;
    for (double a : breaks) levels.push_back({a, 0.0});
    return nodes(g, b, levels, stream);
  }

  // Graded nodes next to a level are rebuilt as level + offset in double-double.
  NodeSet nodes(const DilationGroup& g, const AnisoBall& b, const std::vector<DD>& breaks,
                std::uint64_t stream = 0) const {
    if (!(b.radius > 0.0)) throw Error(ErrorCode::NonPositiveRadius, "ball radius must be positive");
    const int d = g.dim();
    const double rs = 1.0 / std::sqrt(g.p_scale());
    NodeSet ns;
    if (rule_ == Rule::MonteCarlo) {
      Rng rng(mix_seed(seed_, stream));
      ns.x.resize(d, static_cast<Eigen::Index>(count_));
      for (std::size_t k = 0; k < count_;) {
        Vec u(d);
        for (int i = 0; i < d; ++i) u(i) = rng.uniform(-1.0, 1.0);
        if (u.squaredNorm() >= 1.0) continue;
        ns.x.col(static_cast<Eigen::Index>(k++)) = u * rs;
      }
      ns.w = Vec::Constant(static_cast<Eigen::Index>(count_), 1.0 / static_cast<double>(count_));
    } else {
      // singular levels in the reference coordinate s = sqrt(sigma) u_1 in [-1,1]
      std::vector<double> levels;
      std::vector<DD> phys;
      const bool diag = g.generator().isDiagonal(0.0);
      double scale = 1.0;
      if (d == 1 || diag) {
        scale = std::pow(b.radius, g.generator()(0, 0)) * rs;
        for (const DD& a : breaks) {
          double s = (a - DD{b.center(0), 0.0}).value() / scale;
          if (std::abs(std::abs(s) - 1.0) < 1e-14) s = s > 0 ? 1.0 : -1.0;
          if (s >= -1.0 && s <= 1.0) {
            levels.push_back(s);
            phys.push_back(a);
          }
        }
      }
      std::vector<double> anchors, offs;
      ns = reference_grid(d, levels, anchors, offs);
      ns.x *= rs;
      const Mat dm = g.dilation_matrix(b.radius);
      ns.x = (dm * ns.x).colwise() + b.center;
      // rebuild the first coordinate of graded nodes from the exact singular point
      for (std::size_t k = 0; k < anchors.size(); ++k) {
        if (std::isnan(anchors[k])) continue;
        std::size_t lv = 0;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < levels.size(); ++j) {
          const double ref = d == 1 ? levels[j] : std::asin(levels[j]);
          if (std::abs(ref - anchors[k]) < best) best = std::abs(ref - anchors[k]), lv = j;
        }
        double du = offs[k];
        if (d > 1) du = 2.0 * std::cos(anchors[k] + 0.5 * offs[k]) * std::sin(0.5 * offs[k]);
        const DD x = phys[lv] + DD{scale * du, 0.0};
        ns.x(0, static_cast<Eigen::Index>(k)) = x.hi;
        if (x.lo != 0.0) {
          if (!ns.lo.size()) ns.lo = Vec::Zero(ns.w.size());
          ns.lo(static_cast<Eigen::Index>(k)) = x.lo;
        }
      }
      return ns;
    }
    const Mat dm = g.dilation_matrix(b.radius);
    ns.x = (dm * ns.x).colwise() + b.center;
    return ns;
  }

 private:
  // Reference-ball grid; anchors/offs describe graded nodes in the first
  // coordinate (u_1 in d = 1, the angle phi otherwise).
  NodeSet reference_grid(int d, const std::vector<double>& levels, std::vector<double>& anchors,
                         std::vector<double>& offs) const {
    const int m = per_axis_;
    NodeSet ns;
    if (d == 1) {
      detail::GradedNodes gn;
      detail::interval_rule(-1.0, 1.0, levels, m, gn);
      ns.x = Eigen::Map<const Eigen::RowVectorXd>(gn.x.data(), static_cast<Eigen::Index>(gn.x.size()));
      ns.w = Eigen::Map<const Vec>(gn.w.data(), static_cast<Eigen::Index>(gn.w.size()));
      anchors = gn.anchor;
      offs = gn.off;
    } else {
      // first coordinate sin(phi), remaining coordinates on the cos(phi)-scaled (d-1)-ball
      std::vector<double> plevels;
      for (double s : levels) plevels.push_back(std::asin(s));
      detail::GradedNodes gn;
      detail::interval_rule(-0.5 * std::numbers::pi, 0.5 * std::numbers::pi, plevels, m, gn);
      const std::vector<double>&phis = gn.x, &pw = gn.w;
      std::vector<Vec> sub;
      std::vector<double> subw;
      if (d == 2) {
        const GaussRule& gl = cached_gauss_legendre(m);
        for (int i = 0; i < m; ++i) {
          sub.push_back(Vec::Constant(1, gl.nodes(i)));
          subw.push_back(gl.weights(i));
        }
      } else {
        const GaussRule& gl = cached_gauss_legendre(m);
        const int nt = 2 * m;
        for (int i = 0; i < m; ++i) {
          const double v = 0.5 * (gl.nodes(i) + 1.0), rad = std::sqrt(v);
          for (int k = 0; k < nt; ++k) {
            const double th = 2.0 * std::numbers::pi * (k + 0.5) / nt;
            Vec y(d - 1);
            y.setZero();
            y(0) = rad * std::cos(th);
            y(1) = rad * std::sin(th);
            sub.push_back(y);
            subw.push_back(0.5 * gl.weights(i) / nt);
          }
        }
      }
      const std::size_t n = phis.size() * sub.size();
      anchors.clear();
      offs.clear();
      ns.x.resize(d, static_cast<Eigen::Index>(n));
      ns.w.resize(static_cast<Eigen::Index>(n));
      std::size_t k = 0;
      for (std::size_t i = 0; i < phis.size(); ++i) {
        const double c = std::cos(phis[i]);
        const double jac = pw[i] * std::pow(c, d);
        for (std::size_t j = 0; j < sub.size(); ++j, ++k) {
          ns.x(0, static_cast<Eigen::Index>(k)) = std::sin(phis[i]);
          ns.x.block(1, static_cast<Eigen::Index>(k), d - 1, 1) = c * sub[j];
          ns.w(static_cast<Eigen::Index>(k)) = jac * subw[j];
          anchors.push_back(gn.anchor[i]);
          offs.push_back(gn.off[i]);
        }
      }
    }
    ns.w /= ns.w.sum();
    return ns;
  }

  Rule rule_ = Rule::MonteCarlo;
  std::size_t count_ = 4096;
  int per_axis_ = 32;
  std::uint64_t seed_ = 1;
};

// Annulus {s_lo <= |x - center|_A < s_hi} with measure-carrying weights, via
// x = center + delta_s theta / sqrt(sigma), dx = sigma^{-d/2} s^{nu-1} <A theta, theta> ds dtheta.
inline NodeSet annulus_nodes(const DilationGroup& g, const Vec& center, double s_lo, double s_hi, int m,
                             const std::vector<double>& breaks = {}) {
  const int d = g.dim();
  const double rs = 1.0 / std::sqrt(g.p_scale());
  NodeSet ns;
  std::vector<double> xs, ws;
  if (d == 1) {
    const double lam = g.eigenvalues()(0);
    const double a = std::pow(s_lo, lam) * rs, b = std::pow(s_hi, lam) * rs;
    detail::interval_rule(center(0) + a, center(0) + b, breaks, m, xs, ws);
    detail::interval_rule(center(0) - b, center(0) - a, breaks, m, xs, ws);
    ns.x = Eigen::Map<const Eigen::RowVectorXd>(xs.data(), static_cast<Eigen::Index>(xs.size()));
    ns.w = Eigen::Map<const Vec>(ws.data(), static_cast<Eigen::Index>(ws.size()));
    return ns;
  }
  std::vector<double> ss, sw;
  detail::interval_piece(s_lo, s_hi, false, false, m, ss, sw);
  std::vector<Vec> th;
  std::vector<double> tw;
  if (d == 2) {
    const int na = 4 * m;
    for (int k = 0; k < na; ++k) {
      const double a = 2.0 * std::numbers::pi * (k + 0.5) / na;
      Vec t(2);
      t << std::cos(a), std::sin(a);
      th.push_back(t);
      tw.push_back(2.0 * std::numbers::pi / na);
    }
  } else {
    const GaussRule& gl = cached_gauss_legendre(m);
    const int na = 2 * m;
    for (int i = 0; i < m; ++i)
      for (int k = 0; k < na; ++k) {
        const double z = gl.nodes(i), r = std::sqrt(1.0 - z * z), a = 2.0 * std::numbers::pi * (k + 0.5) / na;
        Vec t(3);
        t << r * std::cos(a), r * std::sin(a), z;
        th.push_back(t);
        tw.push_back(gl.weights(i) * 2.0 * std::numbers::pi / na);
      }
  }
  const std::size_t n = ss.size() * th.size();
  ns.x.resize(d, static_cast<Eigen::Index>(n));
  ns.w.resize(static_cast<Eigen::Index>(n));
  std::size_t k = 0;
  const double vol = std::pow(g.p_scale(), -0.5 * d);
  for (std::size_t i = 0; i < ss.size(); ++i)
    for (std::size_t j = 0; j < th.size(); ++j, ++k) {
      const double form = th[j].dot(g.generator() * th[j]);
      ns.x.col(static_cast<Eigen::Index>(k)) = g.dilate(ss[i], th[j] * rs) + center;
      ns.w(static_cast<Eigen::Index>(k)) = vol * std::pow(ss[i], g.nu() - 1.0) * form * sw[i] * tw[j];
    }
  return ns;
}

}  // namespace aniso
