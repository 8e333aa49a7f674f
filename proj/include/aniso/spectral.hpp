#pragma once

#include "aniso/muckenhoupt.hpp"

#include <unsupported/Eigen/FFT>

namespace aniso {

namespace detail {

// Unscaled DFT along every axis of a row-major array (last axis fastest).
// Forward uses e^{-2 pi i jk/n}, inverse e^{+2 pi i jk/n}.
inline void fft_nd(std::vector<cplx>& a, const std::vector<int>& shape, bool inverse) {
  thread_local Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::Unscaled);
  std::size_t total = 1;
  for (int s : shape) total *= static_cast<std::size_t>(s);
  if (a.size() != total) throw Error(ErrorCode::SizeMismatch, "array size does not match shape");
  std::vector<cplx> in, out;
  std::size_t stride = total;
  for (int s : shape) {
    const std::size_t len = static_cast<std::size_t>(s);
    stride /= len;
    if (len == 1) continue;
    in.resize(len);
    for (std::size_t outer = 0; outer < total; outer += len * stride)
      for (std::size_t inner = 0; inner < stride; ++inner) {
        const std::size_t base = outer + inner;
        for (std::size_t k = 0; k < len; ++k) in[k] = a[base + k * stride];
        if (inverse)
          fft.inv(out, in);
        else
          fft.fwd(out, in);
        for (std::size_t k = 0; k < len; ++k) a[base + k * stride] = out[k];
      }
  }
}

// Euclidean half-extents of B_A(0, r) along the coordinate axes.
inline Vec ball_extents(const DilationGroup& g, double r) {
  const Mat dm = g.dilation_matrix(r);
  Vec e(g.dim());
  for (int i = 0; i < g.dim(); ++i) e(i) = dm.row(i).norm() / std::sqrt(g.p_scale());
  return e;
}

// |z|_A < r without solving for the quasi-norm.
inline bool in_ball(const DilationGroup& g, const Vec& z, double r) {
  return g.p_scale() * g.dilate(1.0 / r, z).squaredNorm() < 1.0;
}

}  // namespace detail

// Periodic grid on [-L, L)^d with n nodes per axis. The transforms approximate
// (2 pi)^{-d/2} int f(x) e^{-i x xi} dx on the lattice xi in (pi/L) Z^d.
class FourierGrid {
 public:
  FourierGrid(int d, int n, double half_period = 16.0 * std::numbers::pi) : d_(d), n_(n), L_(half_period) {
    if (d < 1 || d > 3) throw Error(ErrorCode::InvalidArgument, "grid dimension must be 1, 2 or 3");
    if (n < 4 || (n & (n - 1)) != 0) throw Error(ErrorCode::InvalidArgument, "samples per axis must be a power of two");
    if (!(half_period > 0.0)) throw Error(ErrorCode::InvalidArgument, "half period must be positive");
    size_ = 1;
    for (int i = 0; i < d; ++i) size_ *= static_cast<std::size_t>(n);
  }

  int dim() const { return d_; }
  int n() const { return n_; }
  double half_period() const { return L_; }
  double spacing() const { return 2.0 * L_ / n_; }
  double freq_spacing() const { return std::numbers::pi / L_; }
  double cell() const { return std::pow(spacing(), d_); }
  double freq_cell() const { return std::pow(freq_spacing(), d_); }
  std::size_t size() const { return size_; }
  std::vector<int> shape() const { return std::vector<int>(d_, n_); }

  std::vector<int> digits(std::size_t idx) const {
    std::vector<int> j(d_);
    for (int i = d_ - 1; i >= 0; --i) {
      j[i] = static_cast<int>(idx % n_);
      idx /= n_;
    }
    return j;
  }
  std::size_t linear(const std::vector<int>& j) const {
    std::size_t idx = 0;
    for (int i = 0; i < d_; ++i) idx = idx * n_ + static_cast<std::size_t>(((j[i] % n_) + n_) % n_);
    return idx;
  }

  Vec node(std::size_t idx) const {
    const auto j = digits(idx);
    Vec x(d_);
    for (int i = 0; i < d_; ++i) x(i) = -L_ + j[i] * spacing();
    return x;
  }
  // Signed frequency integers m with xi = m pi / L.
  std::vector<int> freq_int(std::size_t idx) const {
    auto k = digits(idx);
    for (int& v : k)
      if (v >= n_ / 2) v -= n_;
    return k;
  }
  Vec freq(std::size_t idx) const {
    const auto m = freq_int(idx);
    Vec xi(d_);
    for (int i = 0; i < d_; ++i) xi(i) = m[i] * freq_spacing();
    return xi;
  }
  // Highest usable frequency per axis; the Nyquist bin is left empty.
  double max_freq() const { return (n_ / 2 - 1) * freq_spacing(); }

  // True when every integer point is a node.
  bool integer_nodes() const {
    const double k = 1.0 / spacing();
    return std::abs(k - std::round(k)) < 1e-9 && std::abs(L_ - std::round(L_)) < 1e-9;
  }

  void forward(CVec& v) const { transform(v, false); }
  void inverse(CVec& v) const { transform(v, true); }

  FourierGrid refined() const { return FourierGrid(d_, 2 * n_, L_); }

  Mat nodes() const {
    Mat x(d_, static_cast<Eigen::Index>(size_));
    for (std::size_t i = 0; i < size_; ++i) x.col(static_cast<Eigen::Index>(i)) = node(i);
    return x;
  }

  std::string descriptor() const {
    std::ostringstream os;
    os << "grid(d=" << d_ << ",n=" << n_ << ",L=" << L_ << ")";
    return os.str();
  }

 private:
  void transform(CVec& v, bool inverse) const {
    if (static_cast<std::size_t>(v.size()) != size_) throw Error(ErrorCode::SizeMismatch, "field size does not match grid");
    std::vector<cplx> a(v.data(), v.data() + v.size());
    // origin at -L contributes (-1)^{sum m}
    auto sign = [this](std::size_t idx) {
      int s = 0;
      for (int k : digits(idx)) s += k;
      return (s & 1) ? -1.0 : 1.0;
    };
    if (inverse)
      for (std::size_t i = 0; i < size_; ++i) a[i] *= sign(i);
    detail::fft_nd(a, shape(), inverse);
    const double norm = std::pow(2.0 * std::numbers::pi, -0.5 * d_) * (inverse ? freq_cell() : cell());
    for (std::size_t i = 0; i < size_; ++i) v(static_cast<Eigen::Index>(i)) = a[i] * (inverse ? norm : norm * sign(i));
  }

  int d_, n_;
  double L_;
  std::size_t size_ = 0;
};

// Vector field sampled on a grid, one array per coordinate.
struct BandLimitedField {
  FourierGrid grid;
  std::vector<CVec> values;
  std::optional<AnisoBall> support;  // declared frequency ball
  std::string id;

  int components() const { return static_cast<int>(values.size()); }
};

using SpectrumFn = std::function<CVec(const Vec&)>;

inline std::vector<CVec> spectrum_of(const BandLimitedField& f) {
  std::vector<CVec> s = f.values;
  for (auto& v : s) f.grid.forward(v);
  return s;
}

inline BandLimitedField field_from_spectra(const FourierGrid& grid, std::vector<CVec> spectra,
                                           std::optional<AnisoBall> support = std::nullopt, std::string id = "") {
  for (auto& v : spectra) grid.inverse(v);
  return {grid, std::move(spectra), std::move(support), std::move(id)};
}

inline BandLimitedField sample_spectrum(const FourierGrid& grid, int components, const SpectrumFn& fn,
                                        std::optional<AnisoBall> support = std::nullopt, std::string id = "") {
  std::vector<CVec> s(components, CVec::Zero(static_cast<Eigen::Index>(grid.size())));
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const CVec v = fn(grid.freq(i));
    if (v.size() != components) throw Error(ErrorCode::SizeMismatch, "spectrum function returned wrong length");
    for (int c = 0; c < components; ++c) s[c](static_cast<Eigen::Index>(i)) = v(c);
  }
  return field_from_spectra(grid, std::move(s), std::move(support), std::move(id));
}

// Throws SupportViolation unless the ball fits strictly inside the usable frequency box.
inline void check_in_band(const DilationGroup& g, const FourierGrid& grid, const AnisoBall& b) {
  const Vec e = detail::ball_extents(g, b.radius);
  for (int i = 0; i < g.dim(); ++i)
    if (std::abs(b.center(i)) + e(i) > grid.max_freq())
      throw Error(ErrorCode::SupportViolation, "frequency ball exceeds the grid band on axis " + std::to_string(i));
}

// Fraction of spectral energy outside factor * (declared ball).
inline double tail_mass(const DilationGroup& g, const BandLimitedField& f, double factor = 1.05) {
  if (!f.support) return 0.0;
  const auto s = spectrum_of(f);
  double out = 0.0, total = 0.0;
  for (std::size_t i = 0; i < f.grid.size(); ++i) {
    double e = 0.0;
    for (const auto& v : s) e += std::norm(v(static_cast<Eigen::Index>(i)));
    total += e;
    if (!detail::in_ball(g, f.grid.freq(i) - f.support->center, factor * f.support->radius)) out += e;
  }
  return total > 0.0 ? out / total : 0.0;
}

// Trigonometric interpolation onto the doubled grid (zero padding).
inline BandLimitedField refine(const BandLimitedField& f) {
  const FourierGrid fine = f.grid.refined();
  const auto s = spectrum_of(f);
  std::vector<CVec> t(s.size(), CVec::Zero(static_cast<Eigen::Index>(fine.size())));
  for (std::size_t i = 0; i < f.grid.size(); ++i) {
    const std::size_t j = fine.linear(f.grid.freq_int(i));
    for (std::size_t c = 0; c < s.size(); ++c) t[c](static_cast<Eigen::Index>(j)) = s[c](static_cast<Eigen::Index>(i));
  }
  return field_from_spectra(fine, std::move(t), f.support, f.id);
}

// W^{1/p} tabulated at the grid nodes.
inline detail::PowerTable weight_roots(const FourierGrid& grid, const MatrixWeight& w, double p) {
  if (!(p > 0.0)) throw Error(ErrorCode::InvalidArgument, "p must be positive");
  if (grid.dim() != 0 && w.size() <= 0) throw Error(ErrorCode::InvalidArgument, "empty weight");
  NodeSet ns{grid.nodes(), Vec::Ones(static_cast<Eigen::Index>(grid.size()))};
  return detail::power_table(w, ns, 1.0 / p);
}

// sum_x |W^{1/p}(x) f(x)|^p h^d
inline double weighted_lp_sum(const detail::PowerTable& P, const std::vector<CVec>& vals, double p, double cell) {
  const std::size_t n = P.size();
  const int N = static_cast<int>(vals.size());
  double s = 0.0;
  CVec v(N);
  for (std::size_t i = 0; i < n; ++i) {
    for (int c = 0; c < N; ++c) v(c) = vals[c](static_cast<Eigen::Index>(i));
    const double a = P.diagonal ? P.d[i].cwiseProduct(v.cwiseAbs()).norm() : (P.m[i] * v).norm();
    s += std::pow(a, p);
  }
  return s * cell;
}

// ||f||_{L^p(W)} as a grid Riemann sum; the error compares against the doubled grid.
inline Estimate weighted_lp_norm(const BandLimitedField& f, const MatrixWeight& w, double p, bool estimate_error = true) {
  if (f.components() != w.size()) throw Error(ErrorCode::SizeMismatch, "field and weight dimensions differ");
  const double v = std::pow(weighted_lp_sum(weight_roots(f.grid, w, p), f.values, p, f.grid.cell()), 1.0 / p);
  if (!estimate_error) return {v, 0.0};
  const BandLimitedField r = refine(f);
  const double v2 = std::pow(weighted_lp_sum(weight_roots(r.grid, w, p), r.values, p, r.grid.cell()), 1.0 / p);
  return {v, std::abs(v2 - v)};
}

using SymbolFn = std::function<cplx(const Vec&)>;

// Symbol on the lattice, zero off its support ball.
struct MultiplierSpec {
  CVec symbol;
  AnisoBall support;
  std::string id;
};

// phi(xi) = tmpl(delta_R^{-1}(xi - c)) on B_A(c, R).
inline MultiplierSpec multiplier_on_ball(const DilationGroup& g, const FourierGrid& grid, const SymbolFn& tmpl,
                                         const Vec& c, double R, std::string id = "phi") {
  const AnisoBall b{c, R};
  check_in_band(g, grid, b);
  MultiplierSpec m{CVec::Zero(static_cast<Eigen::Index>(grid.size())), b, std::move(id)};
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Vec z = grid.freq(i) - c;
    if (detail::in_ball(g, z, R)) m.symbol(static_cast<Eigen::Index>(i)) = tmpl(g.dilate(1.0 / R, z));
  }
  return m;
}

inline BandLimitedField apply_multiplier(const DilationGroup& g, const MultiplierSpec& phi, const BandLimitedField& f) {
  if (static_cast<std::size_t>(phi.symbol.size()) != f.grid.size())
    throw Error(ErrorCode::SizeMismatch, "symbol and field live on different grids");
  if (f.support) check_in_band(g, f.grid, *f.support);
  auto s = spectrum_of(f);
  for (auto& v : s) v = v.cwiseProduct(phi.symbol);
  std::optional<AnisoBall> out = phi.support;
  if (f.support && f.support->radius < phi.support.radius) out = f.support;
  return field_from_spectra(f.grid, std::move(s), out, f.id);
}

// max_x |F^{-1}phi(x)| (1 + R|x|_A)^M / R^nu over the grid nodes.
inline double decay_certificate(const DilationGroup& g, const FourierGrid& grid, const MultiplierSpec& phi, double M) {
  if (!(M > 0.0)) throw Error(ErrorCode::InvalidArgument, "decay order must be positive");
  CVec k = phi.symbol;
  grid.inverse(k);
  const double R = phi.support.radius;
  double best = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double a = std::abs(k(static_cast<Eigen::Index>(i)));
    if (a == 0.0) continue;
    best = std::max(best, a * std::pow(1.0 + R * g.quasi_norm(grid.node(i)), M));
  }
  return best / std::pow(R, g.nu());
}

// Decay order the multiplier theorem asks for: M > max{nu + max(0,p-1) beta, (nu+beta)/min(1,p)}.
inline double required_decay(double nu, double p) {
  const double beta = std::max(nu, nu * p);
  return std::max(nu + std::max(0.0, p - 1.0) * beta, (nu + beta) / std::min(1.0, p));
}

// C-infinity bump exp(s - s/(1 - r^2)) on [0, 1). Larger s buys faster spatial
// decay of the inverse transform, roughly exp(-sqrt(2 s |x|)).
inline double smooth_bump(double r, double sharpness = 1.0) {
  return r < 1.0 ? std::exp(sharpness - sharpness / (1.0 - r * r)) : 0.0;
}

// Unit-ball test spectrum: supp in B_A(0, 1).
struct UnitSpectrum {
  std::string id;
  SpectrumFn fn;
};

// Fixed catalog of seeded test spectra on B_A(0,1) with N coordinates.
inline std::vector<UnitSpectrum> standard_ensemble(const DilationGroup& g, int N, std::uint64_t seed = 1) {
  const int d = g.dim();
  constexpr double kSharp = 6.0;
  std::vector<UnitSpectrum> out;
  // Kaiser-Bessel profile: jump 1/I0(30) ~ 1e-12 at the edge, near-exponential spatial decay
  out.push_back({"kaiser", [g, N](const Vec& eta) {
                   CVec v = CVec::Zero(N);
                   const double r = g.quasi_norm(eta);
                   if (r >= 1.0) return v;
                   const double b = std::cyl_bessel_i(0.0, 30.0 * std::sqrt(1.0 - r * r)) / std::cyl_bessel_i(0.0, 30.0);
                   for (int c = 0; c < N; ++c) v(c) = b * std::exp(cplx(0.0, 1.1 * c));
                   return v;
                 }});
  out.push_back({"bump", [g, N, kSharp](const Vec& eta) {
                   const double b = smooth_bump(g.quasi_norm(eta), kSharp);
                   CVec v(N);
                   for (int c = 0; c < N; ++c) v(c) = cplx(b / (1.0 + c), 0.3 * c * b);
                   return v;
                 }});
  Vec y0 = Vec::Zero(d);
  y0(0) = 1.5;
  out.push_back({"gauss_mod", [g, N, y0, kSharp](const Vec& eta) {
                   const double b = smooth_bump(g.quasi_norm(eta), kSharp) * std::exp(-2.0 * eta.squaredNorm());
                   const cplx ph = std::exp(cplx(0.0, -eta.dot(y0)));
                   CVec v(N);
                   for (int c = 0; c < N; ++c) v(c) = b * ph * std::exp(cplx(0.0, 0.7 * c));
                   return v;
                 }});
  // small bump off the origin, masked to the unit ball
  Vec eta0 = Vec::Zero(d);
  eta0(0) = std::pow(0.35, g.generator()(0, 0)) / std::sqrt(g.p_scale());
  out.push_back({"atom", [g, N, eta0, kSharp](const Vec& eta) {
                   CVec v = CVec::Zero(N);
                   if (g.quasi_norm(eta) >= 1.0) return v;
                   const double b = smooth_bump(g.quasi_norm(eta - eta0) / 0.6, kSharp);
                   for (int c = 0; c < N; ++c) v(c) = b * (c % 2 ? cplx(0.0, 1.0) : cplx(1.0, 0.0));
                   return v;
                 }});
  Rng rng(mix_seed(seed, 0xe25));
  std::vector<std::vector<std::pair<cplx, Vec>>> modes(N);
  for (int c = 0; c < N; ++c)
    for (int k = 0; k < 4; ++k) modes[c].push_back({cplx(rng.normal(), rng.normal()), rng.normal_vec(d) * 2.0});
  out.push_back({"random", [g, N, modes, kSharp](const Vec& eta) {
                   const double b = smooth_bump(g.quasi_norm(eta), kSharp);
                   CVec v = CVec::Zero(N);
                   if (b == 0.0) return v;
                   for (int c = 0; c < N; ++c)
                     for (const auto& [a, y] : modes[c]) v(c) += a * b * std::exp(cplx(0.0, -eta.dot(y)));
                   return v;
                 }});
  return out;
}

// f^(xi) = g^(delta_R^{-1}(xi - c)); in space f(x) = R^nu e^{i x.c} g(delta_R x).
inline BandLimitedField transport_field(const DilationGroup& g, const FourierGrid& grid, const UnitSpectrum& unit,
                                        int components, const Vec& c, double R) {
  const AnisoBall b{c, R};
  check_in_band(g, grid, b);
  return sample_spectrum(
      grid, components,
      [&](const Vec& xi) {
        const Vec z = xi - c;
        if (!detail::in_ball(g, z, R)) return CVec(CVec::Zero(components));
        return unit.fn(g.dilate(1.0 / R, z));
      },
      b, unit.id);
}

struct RatioRow {
  double radius = 1.0;
  Vec center;
  std::string field;
  double ratio = 0.0;
  double error = 0.0;
};

struct ExperimentTable {
  std::vector<RatioRow> rows;
  double max_ratio = 0.0;
  double min_ratio = std::numeric_limits<double>::infinity();
  std::map<double, double> per_radius_max;
  double spread = 1.0;  // max/min of the per-radius maxima

  void finish() {
    for (const auto& r : rows) {
      max_ratio = std::max(max_ratio, r.ratio);
      min_ratio = std::min(min_ratio, r.ratio);
      auto& m = per_radius_max[r.radius];
      m = std::max(m, r.ratio);
    }
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (const auto& [R, m] : per_radius_max) lo = std::min(lo, m), hi = std::max(hi, m);
    spread = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  }
};

struct MultiplierReport {
  ExperimentTable table;
  double symbol_max = 0.0;
  double required_m = 0.0;
  double certificate = 0.0;  // largest K over the (R, c) grid at M = required_m + 1
};

// Ratios ||phi(D) f||_{L^p(W)} / ||f||_{L^p(W)} for phi = tmpl transported to
// B_A(c, R) and f the transported ensemble.
inline MultiplierReport multiplier_bound_experiment(const DilationGroup& g, const MatrixWeight& w, double p,
                                                    const SymbolFn& tmpl, const std::vector<double>& radii,
                                                    const std::vector<Vec>& centers,
                                                    const std::vector<UnitSpectrum>& ensemble, const FourierGrid& grid,
                                                    bool estimate_error = true) {
  MultiplierReport rep;
  rep.required_m = required_decay(g.nu(), p);
  const auto P = weight_roots(grid, w, p);
  std::optional<detail::PowerTable> Pf;
  if (estimate_error) Pf = weight_roots(grid.refined(), w, p);
  auto norm = [&](const BandLimitedField& f) -> Estimate {
    const double v = std::pow(weighted_lp_sum(P, f.values, p, grid.cell()), 1.0 / p);
    if (!Pf) return {v, 0.0};
    const BandLimitedField r = refine(f);
    const double v2 = std::pow(weighted_lp_sum(*Pf, r.values, p, r.grid.cell()), 1.0 / p);
    return {v, std::abs(v2 - v)};
  };
  for (double R : radii)
    for (const Vec& c : centers) {
      const MultiplierSpec phi = multiplier_on_ball(g, grid, tmpl, c, R);
      rep.symbol_max = std::max(rep.symbol_max, phi.symbol.cwiseAbs().maxCoeff());
      rep.certificate = std::max(rep.certificate, decay_certificate(g, grid, phi, rep.required_m + 1.0));
      for (const auto& u : ensemble) {
        const BandLimitedField f = transport_field(g, grid, u, w.size(), c, R);
        const Estimate a = norm(apply_multiplier(g, phi, f));
        const Estimate b = norm(f);
        const double ratio = a.value / b.value;
        rep.table.rows.push_back({R, c, u.id, ratio, ratio * (a.error / a.value + b.error / b.value)});
      }
    }
  rep.table.finish();
  return rep;
}

// Separable raised-cosine symbol: 1 on the bounding box of B_A(0,1), tapering to
// 0 over `taper` per axis.
inline CVec raised_cosine_symbol(const DilationGroup& g, const FourierGrid& grid, double taper = 1.0) {
  const Vec b = detail::ball_extents(g, 1.0);
  CVec m(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Vec xi = grid.freq(i);
    double v = 1.0;
    for (int k = 0; k < g.dim(); ++k) {
      const double a = std::abs(xi(k));
      if (a >= b(k) + taper)
        v = 0.0;
      else if (a > b(k))
        v *= 0.5 * (1.0 + std::cos(std::numbers::pi * (a - b(k)) / taper));
    }
    m(static_cast<Eigen::Index>(i)) = v;
  }
  return m;
}

// Symbol must be 1 on B_A(0,1) and vanish outside {|z| < 3}.
inline void validate_kernel(const DilationGroup& g, const FourierGrid& grid, const CVec& symbol) {
  if (static_cast<std::size_t>(symbol.size()) != grid.size()) throw Error(ErrorCode::SizeMismatch, "kernel size");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Vec xi = grid.freq(i);
    const cplx v = symbol(static_cast<Eigen::Index>(i));
    if (detail::in_ball(g, xi, 1.0) && std::abs(v - 1.0) > 1e-14)
      throw Error(ErrorCode::KernelInvalid, "kernel spectrum is not 1 on the unit ball");
    if (xi.norm() >= 3.0 && std::abs(v) > 0.0) throw Error(ErrorCode::KernelInvalid, "kernel spectrum leaves {|z| < 3}");
  }
}

// Relative max node error of sum_l f(l+u) gamma(x-u-l) over integer l with |l_i| <= truncation.
inline double sampling_representation(const DilationGroup& g, const BandLimitedField& f, const CVec& kernel_symbol,
                                      const Vec& u, int truncation) {
  const FourierGrid& grid = f.grid;
  validate_kernel(g, grid, kernel_symbol);
  if (!grid.integer_nodes()) throw Error(ErrorCode::InvalidArgument, "integer points must be grid nodes");
  const double h = grid.spacing();
  const int d = grid.dim(), n = grid.n();
  std::vector<int> ushift(d);
  for (int i = 0; i < d; ++i) {
    const double s = u(i) / h;
    if (std::abs(s - std::round(s)) > 1e-9) throw Error(ErrorCode::InvalidArgument, "offset must be grid aligned");
    ushift[i] = static_cast<int>(std::lround(s));
  }
  CVec gamma = kernel_symbol;
  grid.inverse(gamma);
  gamma *= std::pow(2.0 * std::numbers::pi, -0.5 * d);
  const int per = static_cast<int>(std::lround(1.0 / h));
  const int Lint = static_cast<int>(std::lround(grid.half_period()));
  const int lo = std::max(-Lint, -truncation), hi = std::min(Lint - 1, truncation);
  std::vector<CVec> rec(f.values.size(), CVec::Zero(static_cast<Eigen::Index>(grid.size())));
  double fmax = 0.0;
  for (const auto& v : f.values) fmax = std::max(fmax, v.cwiseAbs().maxCoeff());
  std::vector<int> l(d, lo);
  for (;;) {
    // node index of l + u
    std::vector<int> jl(d);
    for (int i = 0; i < d; ++i) jl[i] = l[i] * per + ushift[i] + n / 2;
    const std::size_t src = grid.linear(jl);
    bool any = false;
    for (const auto& v : f.values) any = any || std::abs(v(static_cast<Eigen::Index>(src))) > 1e-17 * fmax;
    if (any)
      for (std::size_t x = 0; x < grid.size(); ++x) {
        auto jx = grid.digits(x);
        for (int i = 0; i < d; ++i) jx[i] = jx[i] - jl[i] + n / 2;
        const cplx k = gamma(static_cast<Eigen::Index>(grid.linear(jx)));
        for (std::size_t c = 0; c < f.values.size(); ++c)
          rec[c](static_cast<Eigen::Index>(x)) += f.values[c](static_cast<Eigen::Index>(src)) * k;
      }
    int i = 0;
    while (i < d && ++l[i] > hi) l[i] = lo, ++i;
    if (i == d) break;
  }
  double err = 0.0;
  for (std::size_t c = 0; c < f.values.size(); ++c) err = std::max(err, (rec[c] - f.values[c]).cwiseAbs().maxCoeff());
  return fmax > 0.0 ? err / fmax : err;
}

// Ratios sum_l int_{U(B,l)} |W^{1/p}(x) g(delta_R^{-1} l)|^p dx / ||g||^p_{L^p(W)} with
// U(B,l) = B_A(delta_R^{-1} l, r0/R). Sample points must be grid nodes (diagonal A).
// Empty when delta_R^{-1} Z^d sits on grid nodes for every radius (diagonal A only).
inline std::string sampling_alignment_issue(const DilationGroup& g, const FourierGrid& grid,
                                            const std::vector<double>& radii) {
  if (!g.generator().isDiagonal(0.0)) return "sampling experiment needs diagonal A";
  if (!grid.integer_nodes()) {
    std::ostringstream os;
    os << "sampling lattice is not aligned with the grid: L = " << grid.half_period() << " and 1/h = "
       << 1.0 / grid.spacing() << " must be integers";
    return os.str();
  }
  for (double R : radii)
    for (int i = 0; i < g.dim(); ++i) {
      const double s = std::pow(R, -g.generator()(i, i)) / grid.spacing();
      if (std::abs(s - std::round(s)) > 1e-9 || s < 0.5) {
        std::ostringstream os;
        os << "sampling lattice is not aligned with the grid: R = " << R << " gives a step of " << s
           << " nodes on axis " << i;
        return os.str();
      }
    }
  return {};
}

inline ExperimentTable sampling_inequality_experiment(const DilationGroup& g, const MatrixWeight& w, double p,
                                                      const std::vector<double>& radii, const std::vector<Vec>& centers,
                                                      const std::vector<UnitSpectrum>& ensemble,
                                                      const FourierGrid& grid, double r0, const BallQuadrature& quad,
                                                      bool estimate_error = true, double prune = 1e-8) {
  if (const auto issue = sampling_alignment_issue(g, grid, radii); !issue.empty())
    throw Error(ErrorCode::InvalidArgument, issue);
  const int d = g.dim();
  const double h = grid.spacing(), L = grid.half_period();
  const auto P = weight_roots(grid, w, p);
  std::optional<detail::PowerTable> Pf;
  if (estimate_error) Pf = weight_roots(grid.refined(), w, p);
  const auto breaks = w.singular_points_1d();
  ExperimentTable tab;
  for (double R : radii) {
    // lattice step per axis in nodes
    std::vector<int> step(d);
    for (int i = 0; i < d; ++i) {
      const double s = std::pow(R, -g.generator()(i, i)) / h;
      step[i] = static_cast<int>(std::lround(s));
    }
    const double cell_volume = ball_volume(g, r0 / R);
    for (const Vec& c : centers)
      for (const auto& u : ensemble) {
        const BandLimitedField f = transport_field(g, grid, u, w.size(), c, R);
        double fmax = 0.0;
        for (const auto& v : f.values) fmax = std::max(fmax, v.cwiseAbs().maxCoeff());
        // lattice points delta_R^{-1} l inside [-L, L)^d: node index n/2 + l step
        std::vector<int> lo(d), hi(d), l(d);
        for (int i = 0; i < d; ++i) {
          lo[i] = -((grid.n() / 2) / step[i]);
          hi[i] = (grid.n() / 2 - 1) / step[i];
          l[i] = lo[i];
        }
        double lhs = 0.0;
        for (;;) {
          std::vector<int> j(d);
          Vec x(d);
          for (int i = 0; i < d; ++i) j[i] = grid.n() / 2 + l[i] * step[i], x(i) = -L + j[i] * h;
          const std::size_t idx = grid.linear(j);
          CVec v(f.components());
          for (int cc = 0; cc < f.components(); ++cc) v(cc) = f.values[cc](static_cast<Eigen::Index>(idx));
          if (v.cwiseAbs().maxCoeff() > prune * fmax) {
            const NodeSet ns = quad.nodes(g, {x, r0 / R}, breaks);
            double s = 0.0;
            for (std::size_t k = 0; k < ns.size(); ++k) {
              const Vec y = ns.x.col(static_cast<Eigen::Index>(k));
              const CMat m = detail::eval_nudged([&](const Vec& z) { return w.power(z, 1.0 / p); }, y);
              s += ns.w(static_cast<Eigen::Index>(k)) * std::pow((m * v).norm(), p);
            }
            lhs += cell_volume * s;
          }
          int i = 0;
          while (i < d && ++l[i] > hi[i]) l[i] = lo[i], ++i;
          if (i == d) break;
        }
        const double rhs = weighted_lp_sum(P, f.values, p, grid.cell());
        double err = 0.0;
        if (Pf) {
          const BandLimitedField r = refine(f);
          err = std::abs(weighted_lp_sum(*Pf, r.values, p, r.grid.cell()) - rhs) / rhs * (lhs / rhs);
        }
        tab.rows.push_back({R, c, u.id, lhs / rhs, err});
      }
  }
  tab.finish();
  return tab;
}

}  // namespace aniso
