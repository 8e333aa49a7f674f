#include "aniso/weights.hpp"

#include <gtest/gtest.h>

using namespace aniso;

namespace {

Vec v1(double a) { return Vec::Constant(1, a); }
Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

MatrixWeight diag_abs_power(double gamma) {
  return MatrixWeight::diagonal({ScalarWeight::radial_power(gamma), ScalarWeight::constant(1.0)});
}

}  // namespace

TEST(Weights, ScalarEvaluation) {
  EXPECT_EQ(ScalarWeight::constant(1.0)(v2(3, 4)), 1.0);
  EXPECT_NEAR(ScalarWeight::radial_power(0.5)(v1(4.0)), 2.0, 1e-15);
  EXPECT_NEAR(ScalarWeight::poly_abs_power(Polynomial::coordinate(2, 0), 2.0)(v2(3, 5)), 9.0, 1e-13);
  Polynomial p{{{{2}, 1.0}, {{0}, -4.0}}};  // x^2 - 4
  const ScalarWeight w = ScalarWeight::poly_abs_power(p, 0.5);
  EXPECT_NEAR(w(v1(3.0)), std::sqrt(5.0), 1e-14);
  EXPECT_EQ(w.degree(), 2);
  const auto roots = w.singular_points_1d();
  ASSERT_EQ(roots.size(), 2u);
  EXPECT_NEAR(roots[0], -2.0, 1e-12);
  EXPECT_NEAR(roots[1], 2.0, 1e-12);
  const ScalarWeight prod = ScalarWeight::product({ScalarWeight::radial_power(1.0), ScalarWeight::constant(3.0)});
  EXPECT_NEAR(prod(v1(-2.0)), 6.0, 1e-15);
}

TEST(Weights, LocalIntegrabilityFlags) {
  EXPECT_TRUE(ScalarWeight::radial_power(-0.5).locally_integrable(1));
  EXPECT_FALSE(ScalarWeight::radial_power(-2.0).locally_integrable(1));
  EXPECT_TRUE(ScalarWeight::radial_power(-1.5).locally_integrable(2));
  const ScalarWeight w = ScalarWeight::poly_abs_power(Polynomial::coordinate(1, 0), 0.5);
  EXPECT_TRUE(w.locally_integrable(1, -1.0));   // |x|^{-1/2}
  EXPECT_FALSE(w.locally_integrable(1, -2.0));  // |x|^{-1}
}

TEST(Weights, PullbackComposesAffineMaps) {
  const ScalarWeight w = ScalarWeight::radial_power(0.5);
  const ScalarWeight pw = w.pullback(Mat::Constant(1, 1, 2.0), v1(1.0));
  EXPECT_NEAR(pw(v1(1.5)), 2.0, 1e-15);  // |2*1.5 + 1|^{1/2}
  const auto s = pw.singular_points_1d();
  ASSERT_EQ(s.size(), 1u);
  EXPECT_NEAR(s[0], -0.5, 1e-15);
  const ScalarWeight ppw = pw.pullback(Mat::Constant(1, 1, 3.0), v1(0.0));
  EXPECT_NEAR(ppw(v1(0.25)), std::sqrt(2.5), 1e-15);  // |2*(3*0.25) + 1|^{1/2}
}

TEST(Weights, IdentityPowers) {
  const MatrixWeight id = MatrixWeight::identity(3);
  for (double a : {-1.0, -0.5, 0.3, 2.0})
    EXPECT_NEAR((id.power(v2(0.2, 0.1), a) - CMat::Identity(3, 3)).norm(), 0.0, 1e-15);
}

TEST(Weights, DiagonalPowerClosedForm) {
  const MatrixWeight w = diag_abs_power(0.5);
  const double p = 3.0;
  for (double x : {0.1, 2.0, -7.0}) {
    const CMat m = w.power(v1(x), 1.0 / p);
    EXPECT_NEAR(m(0, 0).real(), std::pow(std::abs(x), 0.5 / p), 1e-12);
    EXPECT_NEAR(m(1, 1).real(), 1.0, 1e-12);
    EXPECT_NEAR(std::abs(m(0, 1)), 0.0, 1e-15);
  }
}

TEST(Weights, HermitianPowerLaws) {
  Polynomial off{{{{1, 0}, 1.0}, {{0, 1}, -0.5}}};
  const MatrixWeight w = MatrixWeight::diag_dominant(
      {ScalarWeight::poly_abs_power(Polynomial::coordinate(2, 0), 0.5), ScalarWeight::constant(2.0)}, {off}, 0.8);
  const double p = 2.5;
  const std::vector<double> exps{1.0 / p, -1.0 / p, 0.5, -0.5};
  Rng rng(12);
  for (int i = 0; i < 50; ++i) {
    const Vec x = rng.normal_vec(2) * 3.0;
    const WeightSample s = w.sample(x);
    EXPECT_GT(s.eigenvalues.minCoeff(), 0.0);
    const CMat rec = s.eigenvectors * s.eigenvalues.cast<cplx>().asDiagonal() * s.eigenvectors.adjoint();
    EXPECT_LE((rec - s.value).norm(), 1e-10 * s.value.norm());
    for (double a : exps)
      for (double b : exps) {
        const CMat lhs = w.power(x, a) * w.power(x, b);
        const CMat rhs = std::abs(a + b) < 1e-15 ? CMat(CMat::Identity(2, 2)) : w.power(x, a + b);
        EXPECT_LE((lhs - rhs).norm(), 1e-9 * std::max(1.0, rhs.norm()));
      }
  }
}

TEST(Weights, ConjugatedMode) {
  CMat u(2, 2);
  const double c = std::cos(0.3), s = std::sin(0.3);
  u << c, -s, s, c;
  const MatrixWeight w = MatrixWeight::conjugated(u, {ScalarWeight::radial_power(1.0), ScalarWeight::constant(1.0)});
  const Vec x = v1(4.0);
  Eigen::Vector2cd d(4.0, 1.0);
  const CMat expect = u * d.asDiagonal() * u.adjoint();
  EXPECT_LE((w.value(x) - expect).norm(), 1e-13);
  Eigen::Vector2cd h(2.0, 1.0);
  EXPECT_LE((w.power(x, 0.5) - u * h.asDiagonal() * u.adjoint()).norm(), 1e-13);
}

TEST(Weights, SingularWeightAtZero) {
  const MatrixWeight w = diag_abs_power(0.5);
  try {
    w.power(v1(0.0), 0.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SingularWeight);
  }
  // near the singular set the floor clamps the small eigenvalue
  const CMat m = w.power(v1(1e-40), 1.0);
  EXPECT_NEAR(m(0, 0).real(), 1e-14 * (1e-20 + 1.0) / 2.0, 1e-28);
}

TEST(Weights, NormEquivalence) {
  EXPECT_TRUE(matrix_norm_equivalence_check(CMat::Identity(3, 3), 2.0));
  CMat e = CMat::Zero(3, 3);
  e(0, 0) = 1.0;
  EXPECT_TRUE(matrix_norm_equivalence_check(e, 1.0));
  Rng rng(31);
  for (int i = 0; i < 1000; ++i) {
    const int n = 1 + i % 4;
    CMat m(n, n);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) m(a, b) = cplx(rng.normal(), rng.normal());
    for (double r : {0.5, 1.0, 2.0, 3.0}) EXPECT_TRUE(matrix_norm_equivalence_check(m, r));
  }
}

TEST(Weights, PolynomialAdmissibility) {
  EXPECT_TRUE(polynomial_ap_validity(1, 0.5, 2.0));
  EXPECT_FALSE(polynomial_ap_validity(2, 1.0, 2.0));
  for (int k : {1, 2, 5})
    for (double p : {1.5, 2.0, 4.0}) EXPECT_TRUE(polynomial_ap_validity(k, 0.0, p));
  // consistency with integrability of w and w^{-1/(p-1)} for P(x) = x^k near 0:
  // graded Riemann sums of |x|^e on (0,1] stay bounded iff e > -1
  auto bounded = [](double e) {
    double prev = 0.0, s = 0.0;
    for (int n = 1 << 10; n <= (1 << 16); n <<= 2) {
      prev = s;
      s = 0.0;
      for (int i = 0; i < n; ++i) {
        const double a = std::pow(static_cast<double>(i) / n, 4), b = std::pow(static_cast<double>(i + 1) / n, 4);
        s += (b - a) * std::pow(0.5 * (a + b), e);
      }
    }
    return s < 1.05 * prev + 1e-12;
  };
  for (int k : {1, 2})
    for (double beta : {-0.8, -0.3, 0.4, 0.9}) {
      const double p = 2.0;
      const bool valid = polynomial_ap_validity(k, beta, p);
      const bool both = bounded(k * beta) && bounded(-k * beta / (p - 1));
      EXPECT_EQ(valid, both) << "k=" << k << " beta=" << beta;
    }
}

TEST(Weights, PulledSingularLevelCarriesLowPart) {
  // -b/m is not a double; the level must cancel m x + b to double-double precision
  const double m = 0.748337276138, b = 0.680518344387;
  const ScalarWeight pw = ScalarWeight::radial_power(1.0).pullback(Mat::Constant(1, 1, m), v1(b));
  const auto lv = pw.singular_levels_1d();
  ASSERT_EQ(lv.size(), 1u);
  EXPECT_LT(std::abs((DD{b, 0.0} + lv[0] * m).value()), 1e-30);
  // an offset far below one ulp of the level still evaluates to m * offset
  const double off = 1e-20;
  const DD x = lv[0] + DD{off, 0.0};
  EXPECT_NEAR(pw(v1(x.hi), x.lo), m * off, 1e-12 * m * off);
  const MatrixWeight mw = MatrixWeight::scalar(ScalarWeight::radial_power(1.0)).pullback(Mat::Constant(1, 1, m), v1(b));
  EXPECT_NEAR(mw.value(v1(x.hi), x.lo)(0, 0).real(), m * off, 1e-12 * m * off);
}

TEST(Weights, PolynomialRootsPolished) {
  Polynomial p{{{{2}, 1.0}, {{0}, -2.0}}};  // x^2 - 2
  for (const DD& r : p.real_roots_dd()) {
    const DD v = r * r - DD{2.0, 0.0};
    EXPECT_LT(std::abs(v.value()), 1e-30);
  }
}
