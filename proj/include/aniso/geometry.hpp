#pragma once

#include "aniso/dilation.hpp"

#include <map>

namespace aniso {

struct AnisoBall {
  Vec center;
  double radius = 1.0;
};

inline bool contains(const DilationGroup& g, const AnisoBall& b, const Vec& x) {
  return g.quasi_norm(x - b.center) < b.radius;
}

// x -> delta_t x + c
struct AffineMap {
  double scale = 1.0;
  Vec shift;

  static AffineMap identity(int d) { return {1.0, Vec::Zero(d)}; }

  Vec apply(const DilationGroup& g, const Vec& x) const { return g.dilate(scale, x) + shift; }

  AffineMap inverse(const DilationGroup& g) const { return {1.0 / scale, -g.dilate(1.0 / scale, shift)}; }

  // (this o first)(x) = this(first(x))
  AffineMap after(const DilationGroup& g, const AffineMap& first) const {
    return {scale * first.scale, g.dilate(scale, first.shift) + shift};
  }

  // Linear form x -> M x + b of the same map.
  Mat matrix(const DilationGroup& g) const { return g.dilation_matrix(scale); }
};

inline double ball_volume(const DilationGroup& g, double r) {
  if (!(r > 0.0)) throw Error(ErrorCode::NonPositiveRadius, "ball radius must be positive");
  const int d = g.dim();
  return std::pow(r, g.nu()) * unit_ball_volume(d) * std::pow(g.p_scale(), -0.5 * d);
}

inline AnisoBall map_ball(const DilationGroup& g, const AffineMap& t, const AnisoBall& b) {
  return {t.apply(g, b.center), b.radius * t.scale};
}

// Smallest verified radius with [-1/2,1/2]^d inside B_A(0, r0).
inline double compute_r0(const DilationGroup& g, double margin) {
  if (!(margin > 0.0)) throw Error(ErrorCode::InvalidArgument, "margin must be positive");
  const int d = g.dim();
  const double half_diag = 0.5 * std::sqrt(static_cast<double>(d));
  const double r0 = (1.0 + margin) * g.envelope(half_diag).second;
  // corners and a face grid of the closed cube
  const int m = 9;
  std::vector<int> idx(d, 0);
  for (;;) {
    Vec x(d);
    bool on_face = false;
    for (int i = 0; i < d; ++i) {
      x(i) = -0.5 + static_cast<double>(idx[i]) / (m - 1);
      on_face = on_face || idx[i] == 0 || idx[i] == m - 1;
    }
    if (on_face && !(g.quasi_norm(x) < r0))
      throw Error(ErrorCode::VerificationFailed, "unit cube point outside B_A(0,r0)");
    int k = 0;
    while (k < d && ++idx[k] == m) idx[k++] = 0;
    if (k == d) break;
  }
  return r0;
}

struct UnitCovering {
  double r0 = 0.0;
  int height_bound = 0;
  int min_count = 0;
  double cell_volume = 0.0;  // |U_0|
  int window = 0;            // |k_i| range inspected around a point

  bool in_cell(const DilationGroup& g, const Vec& z, const Eigen::VectorXi& k) const {
    return g.quasi_norm(z - k.cast<double>()) < r0;
  }
};

namespace detail {

inline int cell_window(const DilationGroup& g, double r0) {
  // Euclidean radius of B_A(0,r0) bounds the integer offsets that can matter.
  const double e = std::max(std::pow(r0, g.alpha1()), std::pow(r0, g.alpha2())) / std::sqrt(g.p_scale());
  return static_cast<int>(std::ceil(e)) + 1;
}

inline int count_cells(const DilationGroup& g, double r0, const Vec& z, int window) {
  const int d = g.dim();
  std::vector<int> off(d, -window);
  Vec base(d);
  for (int i = 0; i < d; ++i) base(i) = std::floor(z(i) + 0.5);
  int count = 0;
  for (;;) {
    Vec k(d);
    for (int i = 0; i < d; ++i) k(i) = base(i) + off[i];
    if (g.quasi_norm(z - k) < r0) ++count;
    int i = 0;
    while (i < d && ++off[i] > window) off[i++] = -window;
    if (i == d) break;
  }
  return count;
}

}  // namespace detail

inline UnitCovering unit_covering(const DilationGroup& g, double r0, int samples_per_axis = 0) {
  if (!(r0 > 0.0)) throw Error(ErrorCode::NonPositiveRadius, "r0 must be positive");
  const int d = g.dim();
  if (samples_per_axis <= 0) samples_per_axis = d == 1 ? 4001 : (d == 2 ? 81 : 21);
  UnitCovering u;
  u.r0 = r0;
  u.window = detail::cell_window(g, r0);
  u.cell_volume = ball_volume(g, r0);
  u.min_count = std::numeric_limits<int>::max();
  std::vector<int> idx(d, 0);
  for (;;) {
    Vec z(d);
    for (int i = 0; i < d; ++i) z(i) = -0.5 + (idx[i] + 0.5) / samples_per_axis;
    const int c = detail::count_cells(g, r0, z, u.window);
    u.height_bound = std::max(u.height_bound, c);
    u.min_count = std::min(u.min_count, c);
    int i = 0;
    while (i < d && ++idx[i] == samples_per_axis) idx[i++] = 0;
    if (i == d) break;
  }
  if (u.min_count < 1) throw Error(ErrorCode::CoverageGap, "sampled point outside every lattice cell");
  return u;
}

struct CoveringOptions {
  std::uint64_t seed = 1;
  int candidates_per_shell = 0;  // 0: chosen from the separation
  int validation_samples = 0;    // 0: chosen from the dimension
  int height_cap = 64;
  std::size_t triangle_samples = 20000;
};

struct StructuredCovering {
  double c = 0.5;
  double max_norm = 1.0;
  double separation = 0.0;  // centers are more than separation*min(bracket) apart
  double shrink = 0.0;      // c': balls of radius c' * bracket are pairwise disjoint
  double triangle_constant = 1.0;
  int height = 0;
  int min_cover = 0;
  std::vector<Vec> centers;
  std::vector<double> brackets;

  std::size_t size() const { return centers.size(); }
  double radius(std::size_t j) const { return c * brackets[j]; }
  AnisoBall ball(std::size_t j) const { return {centers[j], radius(j)}; }
  AffineMap map(std::size_t j) const { return {brackets[j], centers[j]}; }
};

namespace detail {

// Point of the normalized region {lo <= |u|_A < hi} (lo = 0 for the core) drawn
// from a Halton stream by rejection in the Euclidean bounding cube.
inline bool shell_point(const DilationGroup& g, std::uint64_t index, std::uint64_t offset, double lo, double hi,
                        Vec* out) {
  const int d = g.dim();
  const double e = std::max(std::pow(hi, g.alpha1()), std::pow(hi, g.alpha2())) / std::sqrt(g.p_scale());
  Vec u = (2.0 * halton(index, d, offset) - Vec::Ones(d)) * e;
  const double n = g.quasi_norm(u);
  if (n < lo || n >= hi) return false;
  *out = u;
  return true;
}

inline int shell_count(double max_norm) {
  // core plus shells [2^m, 2^{m+1}) meeting {|z| <= max_norm}
  return 1 + (max_norm >= 1.0 ? static_cast<int>(std::floor(std::log2(max_norm))) + 1 : 0);
}

template <class F>
void for_each_region_point(const DilationGroup& g, double max_norm, int per_shell, std::uint64_t offset, F&& f) {
  const int shells = shell_count(max_norm);
  for (int s = 0; s < shells; ++s) {
    const double lo = s == 0 ? 0.0 : 1.0, hi = s == 0 ? 1.0 : 2.0;
    const double scale = s == 0 ? 1.0 : std::pow(2.0, s - 1);
    int accepted = 0;
    for (std::uint64_t i = 0; accepted < per_shell && i < 64ULL * per_shell; ++i) {
      Vec u;
      if (!shell_point(g, i, offset, lo, hi, &u)) continue;
      ++accepted;
      const Vec z = g.dilate(scale, u);
      if (g.quasi_norm(z) > max_norm) continue;
      f(z);
    }
  }
}

}  // namespace detail

inline StructuredCovering build_structured_covering(const DilationGroup& g, double c, double max_norm,
                                                    const CoveringOptions& opt = {}) {
  if (!(c > 0.0 && c <= 1.0)) throw Error(ErrorCode::InvalidArgument, "covering parameter must lie in (0,1]");
  if (!(max_norm >= 1.0)) throw Error(ErrorCode::InvalidArgument, "max_norm must be >= 1");
  const int d = g.dim();
  StructuredCovering cov;
  cov.c = c;
  cov.max_norm = max_norm;
  const double C = std::max(1.0, g.triangle_constant_estimate(opt.triangle_samples, mix_seed(opt.seed, 0)));
  cov.triangle_constant = C;
  cov.separation = c / (2.0 * C);
  const double s = cov.separation;
  cov.shrink = s / (C * (1.0 + C) + s * C * C);

  int per_shell = opt.candidates_per_shell;
  if (per_shell <= 0) per_shell = static_cast<int>(std::ceil(24.0 * std::pow(2.0 / s, d)));
  detail::for_each_region_point(g, max_norm, per_shell, mix_seed(opt.seed, 1) % 1000003, [&](const Vec& z) {
    const double tz = g.bracket(z);
    for (std::size_t j = 0; j < cov.centers.size(); ++j)
      if (g.quasi_norm(z - cov.centers[j]) <= s * std::min(tz, cov.brackets[j])) return;
    cov.centers.push_back(z);
    cov.brackets.push_back(tz);
  });

  int samples = opt.validation_samples;
  if (samples <= 0) samples = d == 1 ? 2000 : 1500;
  std::vector<Vec> pts;
  detail::for_each_region_point(g, max_norm, samples, mix_seed(opt.seed, 2) % 1000033 + 7919,
                                [&](const Vec& z) { pts.push_back(z); });
  std::vector<int> counts(pts.size()), shrunk(pts.size());
  parallel_for(pts.size(), [&](std::size_t i) {
    int n = 0, m = 0;
    for (std::size_t j = 0; j < cov.centers.size(); ++j) {
      const double q = g.quasi_norm(pts[i] - cov.centers[j]);
      if (q < c * cov.brackets[j]) ++n;
      if (q < cov.shrink * cov.brackets[j]) ++m;
    }
    counts[i] = n;
    shrunk[i] = m;
  });
  cov.height = 0;
  cov.min_cover = std::numeric_limits<int>::max();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    cov.height = std::max(cov.height, counts[i]);
    cov.min_cover = std::min(cov.min_cover, counts[i]);
    if (shrunk[i] > 1) throw Error(ErrorCode::VerificationFailed, "shrunk covering balls overlap at a sample");
  }
  if (cov.min_cover < 1) throw Error(ErrorCode::CoverageGap, "sampled point not covered; raise candidate density");
  if (cov.height > opt.height_cap)
    throw Error(ErrorCode::HeightUnbounded, "covering height " + std::to_string(cov.height) + " exceeds cap");
  return cov;
}

// Number of balls of `cov` containing x.
inline int covering_count(const DilationGroup& g, const StructuredCovering& cov, const Vec& x, double factor = 1.0) {
  int n = 0;
  for (std::size_t j = 0; j < cov.size(); ++j)
    if (g.quasi_norm(x - cov.centers[j]) < factor * cov.radius(j)) ++n;
  return n;
}

struct IntersectionStats {
  int max_neighbors = 0;
  double ratio_bound = 1.0;
};

// Balls intersect when a sampled witness lies in both; declared disjoint when the
// center distance exceeds C (r1 + r2)(1 + slack); ambiguous pairs are sampled densely.
inline IntersectionStats covering_intersection_stats(const DilationGroup& g, const StructuredCovering& a,
                                                     const StructuredCovering& b, std::uint64_t seed = 5,
                                                     int witnesses = 256) {
  const double C = std::max(a.triangle_constant, b.triangle_constant);
  const double slack = 0.05;
  const int d = g.dim();
  std::vector<Vec> ref;
  {
    Rng rng(seed);
    while (static_cast<int>(ref.size()) < witnesses) {
      Vec u = rng.unit_vec(d) * std::pow(rng.uniform(), 1.0 / d) / std::sqrt(g.p_scale());
      ref.push_back(u);
    }
  }
  auto intersects = [&](const AnisoBall& p, const AnisoBall& q) {
    const double dist = g.quasi_norm(p.center - q.center);
    if (dist > C * (p.radius + q.radius) * (1.0 + slack)) return false;
    if (dist < std::max(p.radius, q.radius)) return true;  // a center lies in the other ball
    for (const auto& u : ref) {
      if (contains(g, q, g.dilate(p.radius, u) + p.center)) return true;
      if (contains(g, p, g.dilate(q.radius, u) + q.center)) return true;
    }
    return false;
  };
  std::vector<int> nb(a.size(), 0);
  std::vector<double> ratio(a.size(), 1.0);
  parallel_for(a.size(), [&](std::size_t i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (!intersects(a.ball(i), b.ball(j))) continue;
      ++nb[i];
      const double r = a.brackets[i] / b.brackets[j];
      ratio[i] = std::max({ratio[i], r, 1.0 / r});
    }
  });
  IntersectionStats st;
  for (std::size_t i = 0; i < a.size(); ++i) {
    st.max_neighbors = std::max(st.max_neighbors, nb[i]);
    st.ratio_bound = std::max(st.ratio_bound, ratio[i]);
  }
  return st;
}

}  // namespace aniso
