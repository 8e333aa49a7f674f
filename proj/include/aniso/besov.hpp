#pragma once

#include "aniso/spectral.hpp"

namespace aniso {

// Transition profiles for the bump g: 1 on [0, c0], 0 beyond 2 c0.
enum class BumpProfile { Exp, ExpSquared };

inline double smooth_step(double t, BumpProfile kind) {
  // 1 at t <= 0, 0 at t >= 1
  if (t <= 0.0) return 1.0;
  if (t >= 1.0) return 0.0;
  auto E = [kind](double s) { return kind == BumpProfile::Exp ? std::exp(-1.0 / s) : std::exp(-1.0 / (s * s)); };
  const double a = E(1.0 - t), b = E(t);
  return a / (a + b);
}

// The step is flat to all orders at both ends, so finishing it at (1 + width) c0
// keeps g smooth with support inside B_A(0, 2 c0).
inline double bump_profile(double r, double c0, BumpProfile kind, double width = 1.0) {
  return smooth_step((r - c0) / (width * c0), kind);
}

struct BapuOptions {
  double c0 = 0.25;          // g = 1 on B_A(0, c0), supp g in B_A(0, 2 c0)
  double max_norm = 8.0;     // covering truncation {|xi|_A <= max_norm}
  BumpProfile profile = BumpProfile::Exp;
  double transition = 0.3;   // g falls from 1 to 0 over [c0, (1 + transition) c0]
  CoveringOptions covering;
};

// One patch P_j = B_A(xi_j, 2 c0 t_j) sampled on the lattice.
struct Patch {
  Vec center;
  double bracket = 1.0;
  std::vector<int> base;              // lattice integers nearest to the center
  std::vector<int> half;              // frame window is base +- half per axis
  std::vector<std::size_t> index;     // support lattice points (grid linear index)
  std::vector<std::vector<int>> off;  // offsets from base
  std::vector<double> bump, phi, psi;

  std::vector<int> window() const {
    std::vector<int> m(half.size());
    for (std::size_t i = 0; i < half.size(); ++i) m[i] = 2 * half[i] + 1;
    return m;
  }
  std::size_t window_size() const {
    std::size_t s = 1;
    for (int m : window()) s *= static_cast<std::size_t>(m);
    return s;
  }
};

// Both normalizations of the bump family on one covering: phi_j sums to 1 and
// psi_j has squares summing to 1 wherever some bump is positive.
struct Bapu {
  DilationGroup group;
  FourierGrid grid;
  StructuredCovering covering;
  BapuOptions options;
  std::vector<Patch> patches;
  double min_denominator = 0.0;  // smallest sum_k g(T_k^{-1} xi) over the truncation region

  double c1() const { return 2.0 * options.c0; }
  double patch_volume(std::size_t j) const { return ball_volume(group, c1() * patches[j].bracket); }

  // Diagonal of the frame dilation D_k; D_k [-pi, pi)^d holds exactly the window.
  Vec frame_scale(std::size_t k) const {
    const auto m = patches[k].window();
    Vec D(grid.dim());
    for (int i = 0; i < grid.dim(); ++i) D(i) = m[i] / (2.0 * grid.half_period());
    return D;
  }
  double frame_det(std::size_t k) const { return frame_scale(k).prod(); }
};

inline Bapu build_bapu(const DilationGroup& g, const FourierGrid& grid, StructuredCovering covering, BapuOptions opt);

inline Bapu build_bapu(const DilationGroup& g, const FourierGrid& grid, const BapuOptions& opt = {}) {
  if (g.dim() != grid.dim()) throw Error(ErrorCode::SizeMismatch, "group and grid dimensions differ");
  if (!(opt.c0 > 0.0 && opt.c0 <= 0.5)) throw Error(ErrorCode::InvalidArgument, "c0 must lie in (0, 1/2]");
  if (!(opt.transition > 0.0 && opt.transition <= 1.0))
    throw Error(ErrorCode::InvalidArgument, "transition width must lie in (0, 1]");
  return build_bapu(g, grid, build_structured_covering(g, 2.0 * opt.c0, opt.max_norm, opt.covering), opt);
}

// BAPU over a given covering; opt.max_norm is taken from the covering.
inline Bapu build_bapu(const DilationGroup& g, const FourierGrid& grid, StructuredCovering covering, BapuOptions opt) {
  opt.max_norm = covering.max_norm;
  Bapu b{g, grid, std::move(covering), opt, {}, 0.0};
  const int d = g.dim();
  const double dxi = grid.freq_spacing();
  const int mmax = grid.n() / 2 - 1;
  std::vector<double> s1(grid.size(), 0.0), s2(grid.size(), 0.0);
  for (std::size_t j = 0; j < b.covering.size(); ++j) {
    Patch P;
    P.center = b.covering.centers[j];
    P.bracket = b.covering.brackets[j];
    const double R = (1.0 + opt.transition) * opt.c0 * P.bracket;
    const Vec e = detail::ball_extents(g, R);
    std::vector<int> lo(d), hi(d);
    P.base.resize(d);
    P.half.resize(d);
    for (int i = 0; i < d; ++i) {
      lo[i] = static_cast<int>(std::ceil((P.center(i) - e(i)) / dxi));
      hi[i] = static_cast<int>(std::floor((P.center(i) + e(i)) / dxi));
      if (lo[i] < -mmax || hi[i] > mmax)
        throw Error(ErrorCode::TruncationInsufficient, "patch " + std::to_string(j) + " leaves the frequency grid");
      P.base[i] = static_cast<int>(std::lround(P.center(i) / dxi));
      P.half[i] = std::max(P.base[i] - lo[i], hi[i] - P.base[i]);
    }
    std::vector<int> m = lo;
    for (;;) {
      Vec xi(d);
      for (int i = 0; i < d; ++i) xi(i) = m[i] * dxi;
      const double r = g.quasi_norm(xi - P.center) / P.bracket;
      const double v = r < b.c1() ? bump_profile(r, opt.c0, opt.profile, opt.transition) : 0.0;
      // below this v * v underflows and psi would divide by zero
      if (v > std::sqrt(std::numeric_limits<double>::min())) {
        std::vector<int> k(d), o(d);
        for (int i = 0; i < d; ++i) k[i] = m[i], o[i] = m[i] - P.base[i];
        const std::size_t idx = grid.linear(k);
        P.index.push_back(idx);
        P.off.push_back(o);
        P.bump.push_back(v);
        s1[idx] += v;
        s2[idx] += v * v;
      }
      int i = 0;
      while (i < d && ++m[i] > hi[i]) m[i] = lo[i], ++i;
      if (i == d) break;
    }
    b.patches.push_back(std::move(P));
  }
  b.min_denominator = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (g.quasi_norm(grid.freq(i)) <= opt.max_norm) b.min_denominator = std::min(b.min_denominator, s1[i]);
  if (b.min_denominator < 1.0 - 1e-12)
    throw Error(ErrorCode::DenominatorVanishes, "lattice point inside the truncation is not covered");
  for (auto& P : b.patches) {
    P.phi.resize(P.bump.size());
    P.psi.resize(P.bump.size());
    for (std::size_t k = 0; k < P.bump.size(); ++k) {
      P.phi[k] = P.bump[k] / s1[P.index[k]];
      P.psi[k] = P.bump[k] / std::sqrt(s2[P.index[k]]);
    }
  }
  return b;
}

// sum_j phi_j and sum_j psi_j^2 on the lattice.
inline std::pair<Vec, Vec> partition_sums(const Bapu& b) {
  Vec a = Vec::Zero(static_cast<Eigen::Index>(b.grid.size())), q = a;
  for (const auto& P : b.patches)
    for (std::size_t k = 0; k < P.index.size(); ++k) {
      a(static_cast<Eigen::Index>(P.index[k])) += P.phi[k];
      q(static_cast<Eigen::Index>(P.index[k])) += P.psi[k] * P.psi[k];
    }
  return {a, q};
}

// Fraction of spectral energy where no patch reaches.
inline double uncovered_mass(const Bapu& b, const std::vector<CVec>& spectra) {
  std::vector<char> on(b.grid.size(), 0);
  for (const auto& P : b.patches)
    for (std::size_t idx : P.index) on[idx] = 1;
  double out = 0.0, total = 0.0;
  for (const auto& s : spectra)
    for (std::size_t i = 0; i < b.grid.size(); ++i) {
      const double e = std::norm(s(static_cast<Eigen::Index>(i)));
      total += e;
      if (!on[i]) out += e;
    }
  return total > 0.0 ? out / total : 0.0;
}

// max_x |F^{-1} phi_j(x)| (1 + t_j |x|_A)^M / t_j^nu for each patch, over t_j |x|_A <= reach.
// Without a reach the periodic tail of the wide patches dominates.
inline std::vector<double> bapu_decay_certificates(const Bapu& b, double M, bool sqrt_family = false,
                                                   double reach = std::numeric_limits<double>::infinity()) {
  std::vector<double> out(b.patches.size());
  parallel_for(b.patches.size(), [&](std::size_t j) {
    const Patch& P = b.patches[j];
    CVec k = CVec::Zero(static_cast<Eigen::Index>(b.grid.size()));
    for (std::size_t i = 0; i < P.index.size(); ++i)
      k(static_cast<Eigen::Index>(P.index[i])) = sqrt_family ? P.psi[i] : P.phi[i];
    b.grid.inverse(k);
    double best = 0.0;
    for (std::size_t i = 0; i < b.grid.size(); ++i) {
      const double y = P.bracket * b.group.quasi_norm(b.grid.node(i));
      if (y <= reach) best = std::max(best, std::abs(k(static_cast<Eigen::Index>(i))) * std::pow(1.0 + y, M));
    }
    out[j] = best / std::pow(P.bracket, b.group.nu());
  });
  return out;
}

// Frame coefficients c_{k,l}, per patch and coordinate, l over the window lattice
// Z^d / M Z^d in row-major order.
struct FrameCoefficients {
  std::vector<std::vector<CVec>> patch;  // [k][component]
  int components = 0;
  double threshold = 0.0;
  std::size_t kept = 0;
};

namespace detail {

// Window position of an offset (mod M per axis), row-major.
inline std::size_t window_index(const std::vector<int>& off, const std::vector<int>& m) {
  std::size_t idx = 0;
  for (std::size_t i = 0; i < m.size(); ++i) idx = idx * m[i] + static_cast<std::size_t>(((off[i] % m[i]) + m[i]) % m[i]);
  return idx;
}

inline std::vector<int> window_digits(std::size_t idx, const std::vector<int>& m) {
  std::vector<int> l(m.size());
  for (int i = static_cast<int>(m.size()) - 1; i >= 0; --i) {
    l[i] = static_cast<int>(idx % m[i]);
    idx /= m[i];
  }
  return l;
}

// (2 pi)^{-d/2} det(D_k)^{-1/2}
inline double frame_norm(const Bapu& b, std::size_t k) {
  return std::pow(2.0 * std::numbers::pi, -0.5 * b.grid.dim()) / std::sqrt(b.frame_det(k));
}

}  // namespace detail

inline FrameCoefficients analyze(const Bapu& b, const std::vector<CVec>& spectra, double rel_threshold = 1e-12) {
  FrameCoefficients out;
  out.components = static_cast<int>(spectra.size());
  double energy = 0.0;
  for (const auto& s : spectra) energy += s.squaredNorm() * b.grid.freq_cell();
  out.threshold = rel_threshold * std::sqrt(energy);
  out.patch.resize(b.patches.size());
  std::vector<std::size_t> kept(b.patches.size(), 0);
  parallel_for(b.patches.size(), [&](std::size_t k) {
    const Patch& P = b.patches[k];
    const auto m = P.window();
    const double scale = detail::frame_norm(b, k) * b.grid.freq_cell();
    for (const auto& s : spectra) {
      std::vector<cplx> a(P.window_size(), 0.0);
      for (std::size_t i = 0; i < P.index.size(); ++i)
        a[detail::window_index(P.off[i], m)] += s(static_cast<Eigen::Index>(P.index[i])) * P.psi[i];
      detail::fft_nd(a, m, false);
      CVec c(static_cast<Eigen::Index>(a.size()));
      for (std::size_t i = 0; i < a.size(); ++i) {
        const cplx v = a[i] * scale;
        c(static_cast<Eigen::Index>(i)) = std::abs(v) > out.threshold ? v : cplx(0.0);
        if (c(static_cast<Eigen::Index>(i)) != 0.0) ++kept[k];
      }
      out.patch[k].push_back(std::move(c));
    }
  });
  for (std::size_t v : kept) out.kept += v;
  return out;
}

inline FrameCoefficients analyze(const Bapu& b, const BandLimitedField& f, double rel_threshold = 1e-12) {
  return analyze(b, spectrum_of(f), rel_threshold);
}

// Spectra of sum_{k,l} c_{k,l} omega_{k,l}.
inline std::vector<CVec> synthesize_spectra(const Bapu& b, const FrameCoefficients& c) {
  if (c.patch.size() != b.patches.size()) throw Error(ErrorCode::SizeMismatch, "coefficients do not match the BAPU");
  std::vector<CVec> s(c.components, CVec::Zero(static_cast<Eigen::Index>(b.grid.size())));
  for (std::size_t k = 0; k < b.patches.size(); ++k) {
    const Patch& P = b.patches[k];
    const auto m = P.window();
    for (int comp = 0; comp < c.components; ++comp) {
      const CVec& ck = c.patch[k][comp];
      if (static_cast<std::size_t>(ck.size()) != P.window_size()) throw Error(ErrorCode::SizeMismatch, "patch window size");
      std::vector<cplx> a(ck.data(), ck.data() + ck.size());
      detail::fft_nd(a, m, true);
      const double scale = detail::frame_norm(b, k);
      for (std::size_t i = 0; i < P.index.size(); ++i)
        s[comp](static_cast<Eigen::Index>(P.index[i])) += P.psi[i] * scale * a[detail::window_index(P.off[i], m)];
    }
  }
  return s;
}

inline BandLimitedField synthesize(const Bapu& b, const FrameCoefficients& c) {
  return field_from_spectra(b.grid, synthesize_spectra(b, c));
}

// Signed representative of the window index l.
inline std::vector<int> centered_shift(const std::vector<int>& l, const std::vector<int>& m) {
  std::vector<int> r(l.size());
  for (std::size_t i = 0; i < l.size(); ++i) r[i] = l[i] > m[i] / 2 ? l[i] - m[i] : l[i];
  return r;
}

// Spatial center -D_k^{-1} l of omega_{k,l}.
inline Vec atom_center(const Bapu& b, std::size_t k, const std::vector<int>& l) {
  const Vec D = b.frame_scale(k);
  const auto r = centered_shift(l, b.patches[k].window());
  Vec x(b.grid.dim());
  for (int i = 0; i < b.grid.dim(); ++i) x(i) = -r[i] / D(i);
  return x;
}

// omega_{k,l} through its spectrum psi_k e_{k,l}.
inline CVec atom_by_spectrum(const Bapu& b, std::size_t k, const std::vector<int>& l) {
  const Patch& P = b.patches[k];
  const auto m = P.window();
  CVec s = CVec::Zero(static_cast<Eigen::Index>(b.grid.size()));
  const double scale = detail::frame_norm(b, k);
  for (std::size_t i = 0; i < P.index.size(); ++i) {
    double ph = 0.0;
    for (std::size_t a = 0; a < m.size(); ++a) ph += 2.0 * std::numbers::pi * l[a] * P.off[i][a] / m[a];
    s(static_cast<Eigen::Index>(P.index[i])) = P.psi[i] * scale * std::exp(cplx(0.0, ph));
  }
  b.grid.inverse(s);
  return s;
}

// omega_{k,l}(x) = (2 pi)^{-d/2} det(D)^{1/2} mu_k(D x + l) e^{i x.xi~_k} with
// mu_k^(eta) = psi_k(D eta + xi~_k) and mu_k summed directly from its samples.
inline CVec atom_direct(const Bapu& b, std::size_t k, const std::vector<int>& l) {
  const Patch& P = b.patches[k];
  const auto m = P.window();
  const int d = b.grid.dim();
  const Vec D = b.frame_scale(k);
  Vec base(d);
  for (int i = 0; i < d; ++i) base(i) = P.base[i] * b.grid.freq_spacing();
  double deta = 1.0;
  for (int i = 0; i < d; ++i) deta *= 2.0 * std::numbers::pi / m[i];
  const double c = std::pow(2.0 * std::numbers::pi, -0.5 * d);
  CVec out(static_cast<Eigen::Index>(b.grid.size()));
  parallel_for(b.grid.size(), [&](std::size_t x) {
    const Vec xs = b.grid.node(x);
    Vec y(d);
    for (int i = 0; i < d; ++i) y(i) = D(i) * xs(i) + l[i];
    cplx mu = 0.0;
    for (std::size_t i = 0; i < P.index.size(); ++i) {
      double ph = 0.0;
      for (int a = 0; a < d; ++a) ph += y(a) * 2.0 * std::numbers::pi * P.off[i][a] / m[a];
      mu += P.psi[i] * std::exp(cplx(0.0, ph));
    }
    mu *= c * deta;
    out(static_cast<Eigen::Index>(x)) = c * std::sqrt(b.frame_det(k)) * mu * std::exp(cplx(0.0, xs.dot(base)));
  });
  return out;
}

// Torus representative of x - y in [-L, L)^d.
inline Vec torus_difference(const FourierGrid& grid, const Vec& x, const Vec& y) {
  const double P = 2.0 * grid.half_period();
  Vec z = x - y;
  for (int i = 0; i < z.size(); ++i) z(i) -= P * std::floor((z(i) + grid.half_period()) / P);
  return z;
}

// max_x |omega(x)| t^{-nu/2} (1 + t |x - x_{k,l}|_A)^M.
inline double atom_decay(const Bapu& b, std::size_t k, const std::vector<int>& l, double M) {
  const CVec w = atom_by_spectrum(b, k, l);
  const Vec x0 = atom_center(b, k, l);
  const double t = b.patches[k].bracket;
  double best = 0.0;
  for (std::size_t i = 0; i < b.grid.size(); ++i)
    best = std::max(best, std::abs(w(static_cast<Eigen::Index>(i))) *
                              std::pow(1.0 + t * b.group.quasi_norm(torus_difference(b.grid, b.grid.node(i), x0)), M));
  return best / std::pow(t, 0.5 * b.group.nu());
}

enum class BesovScale { PatchVolume, Bracket };

struct BesovParams {
  double s = 0.0;
  double p = 2.0;
  double q = 2.0;  // infinity allowed
  BesovScale scale = BesovScale::PatchVolume;
};

// ||phi_j(D) f||_{L^p(W)} for every patch.
inline std::vector<double> besov_pieces(const Bapu& b, const std::vector<CVec>& spectra, const detail::PowerTable& P,
                                        double p) {
  std::vector<double> out(b.patches.size());
  parallel_for(b.patches.size(), [&](std::size_t j) {
    const Patch& Q = b.patches[j];
    std::vector<CVec> v(spectra.size(), CVec::Zero(static_cast<Eigen::Index>(b.grid.size())));
    for (std::size_t c = 0; c < spectra.size(); ++c) {
      for (std::size_t i = 0; i < Q.index.size(); ++i)
        v[c](static_cast<Eigen::Index>(Q.index[i])) = spectra[c](static_cast<Eigen::Index>(Q.index[i])) * Q.phi[i];
      b.grid.inverse(v[c]);
    }
    out[j] = std::pow(weighted_lp_sum(P, v, p, b.grid.cell()), 1.0 / p);
  });
  return out;
}

inline double combine_pieces(const std::vector<double>& pieces, const std::vector<double>& scales, double s, double q) {
  double acc = 0.0;
  for (std::size_t j = 0; j < pieces.size(); ++j) {
    const double v = std::pow(scales[j], s) * pieces[j];
    acc = std::isinf(q) ? std::max(acc, v) : acc + std::pow(v, q);
  }
  return std::isinf(q) ? acc : std::pow(acc, 1.0 / q);
}

// |P_j|^{1/nu} or t_j, raised to s by combine_pieces.
inline std::vector<double> besov_scales(const Bapu& b, BesovScale kind) {
  std::vector<double> out(b.patches.size());
  for (std::size_t j = 0; j < b.patches.size(); ++j)
    out[j] = kind == BesovScale::Bracket ? b.patches[j].bracket : std::pow(b.patch_volume(j), 1.0 / b.group.nu());
  return out;
}

inline double besov_norm(const Bapu& b, const BandLimitedField& f, const MatrixWeight& w, const BesovParams& prm) {
  if (f.components() != w.size()) throw Error(ErrorCode::SizeMismatch, "field and weight dimensions differ");
  const auto spectra = spectrum_of(f);
  if (uncovered_mass(b, spectra) > 1e-6)
    throw Error(ErrorCode::TruncationInsufficient, "spectral mass beyond the last patch exceeds 1e-6");
  const auto pieces = besov_pieces(b, spectra, weight_roots(b.grid, w, prm.p), prm.p);
  return combine_pieces(pieces, besov_scales(b, prm.scale), prm.s, prm.q);
}

// Cell geometry: U(k,l) = D_k^{-1}(B_A(0, r0) - l), volume |U_0| / det D_k.
struct CellModel {
  double r0 = 1.0;
  double unit_volume = 0.0;
};

inline CellModel cell_model(const DilationGroup& g, double margin = 0.01) {
  const double r0 = compute_r0(g, margin);
  return {r0, ball_volume(g, r0)};
}

// || sum_l |U(k,l)|^{-1/2} c_{k,l} 1_{U(k,l)} ||_{L^p(W)} for every patch.
inline std::vector<double> b_pieces(const Bapu& b, const FrameCoefficients& c, const detail::PowerTable& P, double p,
                                    const CellModel& cells) {
  const int d = b.grid.dim();
  const Vec ext = detail::ball_extents(b.group, cells.r0);
  std::vector<double> out(b.patches.size());
  parallel_for(b.patches.size(), [&](std::size_t k) {
    const auto m = b.patches[k].window();
    const Vec D = b.frame_scale(k);
    const double amp = 1.0 / std::sqrt(cells.unit_volume / b.frame_det(k));
    bool any = false;
    for (const auto& v : c.patch[k]) any = any || v.cwiseAbs().maxCoeff() > 0.0;
    if (!any) {
      out[k] = 0.0;
      return;
    }
    std::vector<CVec> F(c.components, CVec::Zero(static_cast<Eigen::Index>(b.grid.size())));
    std::vector<int> lo(d), hi(d), j(d);
    for (std::size_t x = 0; x < b.grid.size(); ++x) {
      const Vec xs = b.grid.node(x);
      Vec y(d);
      for (int i = 0; i < d; ++i) {
        y(i) = D(i) * xs(i);
        lo[i] = static_cast<int>(std::floor(y(i) - ext(i)));
        hi[i] = static_cast<int>(std::ceil(y(i) + ext(i)));
        j[i] = lo[i];
      }
      for (;;) {
        Vec z(d);
        for (int i = 0; i < d; ++i) z(i) = y(i) - j[i];
        if (detail::in_ball(b.group, z, cells.r0)) {
          // cell of l = -j
          std::vector<int> l(d);
          for (int i = 0; i < d; ++i) l[i] = -j[i];
          const std::size_t li = detail::window_index(l, m);
          for (int comp = 0; comp < c.components; ++comp)
            F[comp](static_cast<Eigen::Index>(x)) += amp * c.patch[k][comp](static_cast<Eigen::Index>(li));
        }
        int i = 0;
        while (i < d && ++j[i] > hi[i]) j[i] = lo[i], ++i;
        if (i == d) break;
      }
    }
    out[k] = std::pow(weighted_lp_sum(P, F, p, b.grid.cell()), 1.0 / p);
  });
  return out;
}

inline std::vector<double> bracket_scales(const Bapu& b) {
  std::vector<double> out;
  for (const auto& P : b.patches) out.push_back(P.bracket);
  return out;
}

inline double discrete_b_norm(const Bapu& b, const FrameCoefficients& c, const MatrixWeight& w, const BesovParams& prm,
                              const CellModel& cells) {
  if (c.components != w.size()) throw Error(ErrorCode::SizeMismatch, "coefficients and weight dimensions differ");
  const auto pieces = b_pieces(b, c, weight_roots(b.grid, w, prm.p), prm.p, cells);
  return combine_pieces(pieces, bracket_scales(b), prm.s, prm.q);
}

// Random coefficients on a few patches, zero elsewhere.
inline FrameCoefficients random_coefficients(const Bapu& b, int components, const std::vector<std::size_t>& patches,
                                             std::uint64_t seed, int per_patch = 12) {
  FrameCoefficients c;
  c.components = components;
  c.patch.resize(b.patches.size());
  Rng rng(seed);
  for (std::size_t k = 0; k < b.patches.size(); ++k)
    for (int comp = 0; comp < components; ++comp)
      c.patch[k].push_back(CVec::Zero(static_cast<Eigen::Index>(b.patches[k].window_size())));
  for (std::size_t k : patches) {
    const auto m = b.patches[k].window();
    for (int r = 0; r < per_patch; ++r) {
      // cluster near l = 0 so the atoms stay away from each other's wrap-around
      std::vector<int> l(m.size());
      for (std::size_t i = 0; i < m.size(); ++i) {
        const int span = std::min(m[i], 7);
        l[i] = static_cast<int>(rng.next() % static_cast<std::uint64_t>(span)) - span / 2;
      }
      const std::size_t li = detail::window_index(l, m);
      for (int comp = 0; comp < components; ++comp) c.patch[k][comp](static_cast<Eigen::Index>(li)) = cplx(rng.normal(), rng.normal());
    }
  }
  return c;
}

struct EquivalenceRow {
  double s = 0.0, p = 2.0, q = 2.0;
  std::string field;
  double ratio = 0.0;   // ||C f||_b / ||f||_B
  bool synthesis = false;        // true: ||T c||_B / ||c||_b
};

struct EquivalenceReport {
  std::vector<EquivalenceRow> rows;
  double min_ratio = std::numeric_limits<double>::infinity();
  double max_ratio = 0.0;
};

// Ratios over the (s, p, q) grid for fields (analysis) and coefficient sets (synthesis).
inline EquivalenceReport norm_equivalence_experiment(const Bapu& b, const MatrixWeight& w,
                                                     const std::vector<BandLimitedField>& fields,
                                                     const std::vector<std::pair<std::string, FrameCoefficients>>& coeffs,
                                                     const std::vector<double>& s_set, const std::vector<double>& p_set,
                                                     const std::vector<double>& q_set, const CellModel& cells,
                                                     BesovScale scale = BesovScale::PatchVolume) {
  EquivalenceReport rep;
  const auto bs = besov_scales(b, scale);
  const auto ts = bracket_scales(b);
  auto add = [&](EquivalenceRow r) {
    rep.min_ratio = std::min(rep.min_ratio, r.ratio);
    rep.max_ratio = std::max(rep.max_ratio, r.ratio);
    rep.rows.push_back(std::move(r));
  };
  for (double p : p_set) {
    const auto P = weight_roots(b.grid, w, p);
    for (const auto& f : fields) {
      const auto spectra = spectrum_of(f);
      if (uncovered_mass(b, spectra) > 1e-6)
        throw Error(ErrorCode::TruncationInsufficient, "field " + f.id + " has mass beyond the last patch");
      const auto bp = besov_pieces(b, spectra, P, p);
      const auto cp = b_pieces(b, analyze(b, spectra), P, p, cells);
      for (double s : s_set)
        for (double q : q_set)
          add({s, p, q, f.id, combine_pieces(cp, ts, s, q) / combine_pieces(bp, bs, s, q), false});
    }
    for (const auto& [id, c] : coeffs) {
      const auto bp = besov_pieces(b, synthesize_spectra(b, c), P, p);
      const auto cp = b_pieces(b, c, P, p, cells);
      for (double s : s_set)
        for (double q : q_set) add({s, p, q, id, combine_pieces(bp, bs, s, q) / combine_pieces(cp, ts, s, q), true});
    }
  }
  return rep;
}

struct IndependenceRow {
  double s = 0.0, p = 2.0, q = 2.0;
  std::string field;
  double ratio = 0.0;
};

// ||f||_B under two BAPUs on the same grid.
inline std::vector<IndependenceRow> bapu_independence_check(const Bapu& a, const Bapu& b, const MatrixWeight& w,
                                                            const std::vector<BandLimitedField>& fields,
                                                            const std::vector<double>& s_set,
                                                            const std::vector<double>& p_set,
                                                            const std::vector<double>& q_set,
                                                            BesovScale scale = BesovScale::PatchVolume) {
  std::vector<IndependenceRow> out;
  const auto sa = besov_scales(a, scale), sb = besov_scales(b, scale);
  for (double p : p_set) {
    const auto Pa = weight_roots(a.grid, w, p);
    const auto Pb = weight_roots(b.grid, w, p);
    for (const auto& f : fields) {
      const auto spectra = spectrum_of(f);
      const auto pa = besov_pieces(a, spectra, Pa, p), pb = besov_pieces(b, spectra, Pb, p);
      for (double s : s_set)
        for (double q : q_set) out.push_back({s, p, q, f.id, combine_pieces(pa, sa, s, q) / combine_pieces(pb, sb, s, q)});
    }
  }
  return out;
}

}  // namespace aniso
