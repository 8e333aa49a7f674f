#include "aniso/besov.hpp"

#include <gtest/gtest.h>

using namespace aniso;

namespace {

const double kPi = std::numbers::pi;

DilationGroup line() { return DilationGroup(Mat::Identity(1, 1)); }
DilationGroup aniso2() {
  Mat a = Mat::Zero(2, 2);
  a(0, 0) = 1.0;
  a(1, 1) = 2.0;
  return DilationGroup(a);
}

struct Rig {
  DilationGroup g;
  FourierGrid grid;
  Bapu b;
};

Rig setup1(BapuOptions o = {}) {
  const DilationGroup g = line();
  const FourierGrid grid(1, 2048, 16.0 * kPi);
  o.max_norm = 31.0;
  return {g, grid, build_bapu(g, grid, o)};
}

Rig setup2(BapuOptions o = {}) {
  const DilationGroup g = aniso2();
  const FourierGrid grid(2, 128, 4.0 * kPi);
  o.max_norm = 2.0;
  return {g, grid, build_bapu(g, grid, o)};
}

std::vector<BandLimitedField> fields(const Rig& s, int N = 1) {
  const auto ens = standard_ensemble(s.g, N, 3);
  const int d = s.grid.dim();
  Vec c = Vec::Zero(d);
  std::vector<BandLimitedField> out{transport_field(s.g, s.grid, ens[1], N, c, 1.0)};
  c(0) = d == 1 ? 6.0 : 1.0;
  out.push_back(transport_field(s.g, s.grid, ens[4], N, c, d == 1 ? 2.0 : 0.6));
  return out;
}

double energy(const std::vector<CVec>& spectra, const FourierGrid& grid) {
  double e = 0.0;
  for (const auto& s : spectra) e += s.squaredNorm() * grid.freq_cell();
  return e;
}

double coefficient_energy(const FrameCoefficients& c) {
  double e = 0.0;
  for (const auto& k : c.patch)
    for (const auto& v : k) e += v.squaredNorm();
  return e;
}

FrameCoefficients single(const Bapu& b, std::size_t k, const std::vector<int>& l, cplx value) {
  FrameCoefficients c = random_coefficients(b, 1, {}, 1);
  c.patch[k][0](static_cast<Eigen::Index>(detail::window_index(l, b.patches[k].window()))) = value;
  return c;
}

}  // namespace

TEST(Besov, SmoothStepEndpoints) {
  for (auto kind : {BumpProfile::Exp, BumpProfile::ExpSquared}) {
    EXPECT_EQ(smooth_step(-0.1, kind), 1.0);
    EXPECT_EQ(smooth_step(1.0, kind), 0.0);
    EXPECT_NEAR(smooth_step(0.5, kind), 0.5, 1e-15);
    EXPECT_NEAR(smooth_step(0.3, kind) + smooth_step(0.7, kind), 1.0, 1e-15);
  }
  EXPECT_EQ(bump_profile(0.25, 0.25, BumpProfile::Exp), 1.0);
  EXPECT_EQ(bump_profile(0.5, 0.25, BumpProfile::Exp), 0.0);
  EXPECT_EQ(bump_profile(0.33, 0.25, BumpProfile::Exp, 0.3), 0.0);
}

TEST(Besov, PartitionsOfUnity) {
  for (const Rig& s : {setup1(), setup2()}) {
    const auto [a, q] = partition_sums(s.b);
    std::size_t inside = 0;
    for (std::size_t i = 0; i < s.grid.size(); ++i) {
      if (s.g.quasi_norm(s.grid.freq(i)) > s.b.options.max_norm) continue;
      ++inside;
      EXPECT_NEAR(a(static_cast<Eigen::Index>(i)), 1.0, 1e-10);
      EXPECT_NEAR(q(static_cast<Eigen::Index>(i)), 1.0, 1e-10);
    }
    EXPECT_GT(inside, 100u);
    EXPECT_GE(s.b.min_denominator, 1.0 - 1e-12);
  }
}

TEST(Besov, SupportInsidePatchBall) {
  const Rig s = setup2();
  for (const auto& P : s.b.patches)
    for (std::size_t idx : P.index) {
      const double r = s.g.quasi_norm(s.grid.freq(idx) - P.center) / P.bracket;
      EXPECT_LT(r, s.b.c1());
      EXPECT_LT(r, (1.0 + s.b.options.transition) * s.b.options.c0);
    }
}

TEST(Besov, ConstructionErrors) {
  const DilationGroup g = line();
  try {
    BapuOptions o;
    o.max_norm = 200.0;
    build_bapu(g, FourierGrid(1, 256, 16.0 * kPi), o);
    FAIL() << "expected TruncationInsufficient";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TruncationInsufficient);
  }
  try {
    BapuOptions o;
    o.max_norm = 20.0;
    StructuredCovering cov = build_structured_covering(g, 2.0 * o.c0, o.max_norm);
    cov.centers.erase(cov.centers.begin() + 5);
    cov.brackets.erase(cov.brackets.begin() + 5);
    build_bapu(g, FourierGrid(1, 1024, 16.0 * kPi), cov, o);
    FAIL() << "expected DenominatorVanishes";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DenominatorVanishes);
  }
  BapuOptions bad;
  bad.transition = 0.0;
  EXPECT_THROW(build_bapu(g, FourierGrid(1, 256, 16.0 * kPi), bad), Error);
}

TEST(Besov, ParsevalAndRetract) {
  for (const Rig& s : {setup1(), setup2()})
    for (const auto& f : fields(s, 2)) {
      const auto spectra = spectrum_of(f);
      const FrameCoefficients c = analyze(s.b, spectra);
      EXPECT_NEAR(coefficient_energy(c), energy(spectra, s.grid), 1e-8 * energy(spectra, s.grid));
      const auto back = synthesize_spectra(s.b, c);
      for (int comp = 0; comp < 2; ++comp)
        EXPECT_LE((back[comp] - spectra[comp]).cwiseAbs().maxCoeff(), 1e-8 * spectra[comp].cwiseAbs().maxCoeff());
    }
}

TEST(Besov, ZeroAndSingleCoefficientSynthesis) {
  const Rig s = setup2();
  const FrameCoefficients zero = random_coefficients(s.b, 1, {}, 1);
  EXPECT_EQ(synthesize_spectra(s.b, zero)[0].cwiseAbs().maxCoeff(), 0.0);
  const std::size_t k = 40;
  const std::vector<int> l{2, -1};
  const cplx v(0.5, -2.0);
  CVec atom = atom_by_spectrum(s.b, k, l);
  const BandLimitedField f = synthesize(s.b, single(s.b, k, l, v));
  EXPECT_LE((f.values[0] - v * atom).cwiseAbs().maxCoeff(), 1e-12 * atom.cwiseAbs().maxCoeff());
}

TEST(Besov, AtomRoutesAgree) {
  for (const Rig& s : {setup1(), setup2()}) {
    for (std::size_t k : {std::size_t{0}, s.b.patches.size() / 2, s.b.patches.size() - 1}) {
      std::vector<int> l(s.grid.dim(), 1);
      l[0] = -2;
      const CVec a = atom_by_spectrum(s.b, k, l), b = atom_direct(s.b, k, l);
      EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-8 * a.cwiseAbs().maxCoeff());
      // ||omega||^2 = (2 pi)^{-d} det(D)^{-1} sum psi^2 dxi^d
      double psi2 = 0.0;
      for (double p : s.b.patches[k].psi) psi2 += p * p;
      const double expect = std::pow(2.0 * kPi, -s.grid.dim()) / s.b.frame_det(k) * psi2 * s.grid.freq_cell();
      EXPECT_NEAR(a.squaredNorm() * s.grid.cell(), expect, 1e-10 * expect);
    }
  }
}

TEST(Besov, AtomPeaksAtItsCenter) {
  // |omega_{k,l}| peaks at -D_k^{-1} l
  const Rig s = setup1();
  for (std::size_t k : {std::size_t{4}, std::size_t{15}})
    for (int l : {0, 3, -5}) {
      const CVec a = atom_by_spectrum(s.b, k, {l});
      Eigen::Index at = 0;
      a.cwiseAbs().maxCoeff(&at);
      const Vec x0 = atom_center(s.b, k, {l});
      const Vec gap = torus_difference(s.grid, s.grid.node(static_cast<std::size_t>(at)), x0);
      EXPECT_LE(std::abs(gap(0)), s.grid.spacing()) << "k = " << k << ", l = " << l;
    }
}

TEST(Besov, AtomDecayCertificate) {
  const Rig s = setup2();
  const double M = s.g.nu() + 2.0;
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (std::size_t k = 0; k < s.b.patches.size(); k += 9) {
    const double v = atom_decay(s.b, k, {1, 0}, M);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  EXPECT_TRUE(std::isfinite(hi));
  EXPECT_LT(hi / lo, 50.0);
}

TEST(Besov, BapuDecayCertificates) {
  const Rig s = setup1();
  for (double M : {s.g.nu() + 1.0, s.g.nu() + 3.0})
    for (bool sq : {false, true}) {
      // one constant for every bracket: the family is a dilate of one bump up to lattice placement
      const auto cert = bapu_decay_certificates(s.b, M, sq, 40.0);
      const auto [lo, hi] = std::minmax_element(cert.begin(), cert.end());
      EXPECT_TRUE(std::isfinite(*hi));
      EXPECT_LE(*hi / *lo, 5.0) << "M = " << M;
    }
}

TEST(Besov, SingleCoefficientClosedForm) {
  // one cell: t^s |U|^{-1/2} |c| |U cap grid|^{1/p}
  const Rig s = setup2();
  const CellModel cells = cell_model(s.g);
  const std::size_t k = 60;
  const std::vector<int> l{1, -2};
  const cplx v(3.0, 4.0);
  const FrameCoefficients c = single(s.b, k, l, v);
  const Vec D = s.b.frame_scale(k);
  std::size_t hits = 0;
  for (std::size_t x = 0; x < s.grid.size(); ++x) {
    Vec z = s.grid.node(x);
    for (int i = 0; i < 2; ++i) z(i) = D(i) * z(i) + l[i];
    if (s.g.quasi_norm(z) < cells.r0) ++hits;
  }
  ASSERT_GT(hits, 10u);
  const double U = cells.unit_volume / s.b.frame_det(k);
  for (double sv : {-1.0, 0.0, 1.0})
    for (double p : {1.0, 2.0}) {
      const double got = discrete_b_norm(s.b, c, MatrixWeight::identity(1), {sv, p, 2.0}, cells);
      const double want = std::pow(s.b.patches[k].bracket, sv) * std::abs(v) / std::sqrt(U) *
                          std::pow(hits * s.grid.cell(), 1.0 / p);
      EXPECT_NEAR(got, want, 1e-6 * want);
    }
}

TEST(Besov, CellVolumeMatchesGridCount) {
  const Rig s = setup1();
  const CellModel cells = cell_model(s.g);
  for (std::size_t k : {std::size_t{3}, std::size_t{20}}) {
    const double U = cells.unit_volume / s.b.frame_det(k);
    const FrameCoefficients c = single(s.b, k, {0}, 1.0);
    // p = 1, s = 0: |U|^{-1/2} |U cap grid|, which tends to |U|^{1/2}
    const double got = discrete_b_norm(s.b, c, MatrixWeight::identity(1), {0.0, 1.0, 1.0}, cells);
    EXPECT_NEAR(got, std::sqrt(U), 2.0 * s.grid.spacing() / std::sqrt(U));
  }
}

TEST(Besov, Homogeneity) {
  const Rig s = setup1();
  const auto f = fields(s)[1];
  BandLimitedField g = f;
  const cplx lambda(-1.5, 2.0);
  g.values[0] *= lambda;
  const MatrixWeight w = MatrixWeight::scalar(ScalarWeight::radial_power(0.5));
  for (BesovParams prm : {BesovParams{0.0, 2.0, 2.0}, BesovParams{1.0, 1.0, std::numeric_limits<double>::infinity()},
                          BesovParams{-1.0, 0.5, 1.0}}) {
    const double a = besov_norm(s.b, f, w, prm), b = besov_norm(s.b, g, w, prm);
    EXPECT_NEAR(b, std::abs(lambda) * a, 1e-10 * b);
  }
  const auto c = analyze(s.b, f);
  auto c2 = c;
  for (auto& k : c2.patch)
    for (auto& v : k) v *= lambda;
  const CellModel cells = cell_model(s.g);
  const double a = discrete_b_norm(s.b, c, w, {0.5, 1.5, 2.0}, cells);
  EXPECT_NEAR(discrete_b_norm(s.b, c2, w, {0.5, 1.5, 2.0}, cells), std::abs(lambda) * a, 1e-10 * a);
}

TEST(Besov, PlancherelBracket) {
  // s = 0, p = q = 2, W = I: sum phi_j^2 lies in [1/height, 1]
  for (const Rig& s : {setup1(), setup2()}) {
    std::vector<int> height(s.grid.size(), 0);
    for (const auto& P : s.b.patches)
      for (std::size_t idx : P.index) ++height[idx];
    const int H = *std::max_element(height.begin(), height.end());
    for (const auto& f : fields(s)) {
      const double l2 = std::sqrt(energy(spectrum_of(f), s.grid));
      const double v = besov_norm(s.b, f, MatrixWeight::identity(1), {0.0, 2.0, 2.0});
      EXPECT_LE(v, l2 * (1.0 + 1e-6));
      EXPECT_GE(v, l2 / std::sqrt(static_cast<double>(H)) * (1.0 - 1e-6));
    }
  }
}

TEST(Besov, TruncationInsufficientForWideField) {
  const Rig s = setup1();
  const auto ens = standard_ensemble(s.g, 1, 3);
  Vec c(1);
  c(0) = 40.0;
  const BandLimitedField f = transport_field(s.g, s.grid, ens[1], 1, c, 4.0);
  try {
    besov_norm(s.b, f, MatrixWeight::identity(1), {});
    FAIL() << "expected TruncationInsufficient";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TruncationInsufficient);
  }
}

TEST(Besov, ScaleChoicesAreEquivalent) {
  // |P_j|^{1/nu} = c1 |B_1|^{1/nu} t_j exactly, so the ratio is that constant to the power s
  const Rig s = setup2();
  const auto f = fields(s)[1];
  const double k = s.b.c1() * std::pow(ball_volume(s.g, 1.0), 1.0 / s.g.nu());
  for (double sv : {-1.0, 1.0}) {
    const double a = besov_norm(s.b, f, MatrixWeight::identity(1), {sv, 2.0, 2.0, BesovScale::PatchVolume});
    const double b = besov_norm(s.b, f, MatrixWeight::identity(1), {sv, 2.0, 2.0, BesovScale::Bracket});
    EXPECT_NEAR(a / b, std::pow(k, sv), 1e-10);
  }
}

TEST(Besov, IndependenceSameBapuIsOne) {
  const Rig s = setup1();
  for (const auto& r : bapu_independence_check(s.b, s.b, MatrixWeight::identity(1), fields(s), {-1, 0, 1}, {1, 2}, {1, 2}))
    EXPECT_EQ(r.ratio, 1.0);
}

TEST(Besov, IndependenceAcrossProfiles) {
  BapuOptions o;
  o.profile = BumpProfile::ExpSquared;
  for (const auto& [a, b] : {std::pair{setup1(), setup1(o)}, std::pair{setup2(), setup2(o)}})
    for (const auto& r :
         bapu_independence_check(a.b, b.b, MatrixWeight::identity(1), fields(a), {-1, 0, 1}, {1, 2}, {1, 2},
                                 BesovScale::Bracket)) {
      EXPECT_GE(r.ratio, 0.5);
      EXPECT_LE(r.ratio, 2.0);
    }
}

TEST(Besov, EquivalenceWindowOnTheLine) {
  const Rig s = setup1();
  std::vector<std::pair<std::string, FrameCoefficients>> cs;
  for (const auto& f : fields(s)) cs.push_back({f.id, analyze(s.b, f)});
  const auto rep = norm_equivalence_experiment(s.b, MatrixWeight::identity(1), fields(s), cs, {-1, 0, 1}, {1, 2},
                                               {1, 2}, cell_model(s.g), BesovScale::Bracket);
  EXPECT_EQ(rep.rows.size(), 2u * 2 * 3 * 2 * 2);
  EXPECT_GE(rep.min_ratio, 0.25);
  EXPECT_LE(rep.max_ratio, 4.0);
}

TEST(Besov, RatiosStableUnderAffinePullback) {
  // f -> f o T, W -> W o T with T x = delta_2 x + b on the line
  const Rig s = setup1();
  const MatrixWeight w = MatrixWeight::scalar(ScalarWeight::radial_power(0.5));
  const Mat D = s.g.dilation_matrix(2.0);
  Vec shift(1);
  shift(0) = 4.0 * s.grid.spacing();
  const MatrixWeight wT = w.pullback(D, shift);
  const auto ens = standard_ensemble(s.g, 1, 3);
  Vec c(1);
  c(0) = 6.0;
  const double R = 1.0;
  const BandLimitedField f = transport_field(s.g, s.grid, ens[1], 1, c, R);
  // (f o T)^(xi) = det(D)^{-1} e^{i b.D^{-1} xi} f^(D^{-1} xi)
  const Mat Di = D.inverse();
  const double det = D.determinant();
  const BandLimitedField fT = sample_spectrum(s.grid, 1, [&](const Vec& xi) {
    const Vec eta = Di * xi;
    CVec v = CVec::Zero(1);
    if (detail::in_ball(s.g, eta - c, R)) v = ens[1].fn(s.g.dilate(1.0 / R, eta - c));
    return CVec(v * std::exp(cplx(0.0, shift.dot(eta))) / det);
  });
  const CellModel cells = cell_model(s.g);
  for (double p : {1.0, 2.0}) {
    const BesovParams prm{0.0, p, 2.0, BesovScale::Bracket};
    const double r = discrete_b_norm(s.b, analyze(s.b, f), w, prm, cells) / besov_norm(s.b, f, w, prm);
    const double rT = discrete_b_norm(s.b, analyze(s.b, fT), wT, prm, cells) / besov_norm(s.b, fT, wT, prm);
    EXPECT_NEAR(rT / r, 1.0, 0.05) << "p = " << p;
  }
}
