#include "aniso/dilation.hpp"

#include <gtest/gtest.h>

using namespace aniso;

namespace {

Mat diag2(double a, double b) {
  Mat m = Mat::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return m;
}

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

}  // namespace

TEST(Dilation, SpectralDataOfIdentity) {
  DilationGroup g(Mat::Identity(2, 2));
  EXPECT_DOUBLE_EQ(g.nu(), 2.0);
  EXPECT_DOUBLE_EQ(g.alpha1(), 1.0);
  EXPECT_DOUBLE_EQ(g.alpha2(), 1.0);
}

TEST(Dilation, SpectralDataOfDiagonal) {
  DilationGroup g(diag2(1, 2));
  EXPECT_DOUBLE_EQ(g.nu(), 3.0);
  EXPECT_DOUBLE_EQ(g.alpha1(), 1.0);
  EXPECT_DOUBLE_EQ(g.alpha2(), 2.0);
}

TEST(Dilation, SpectralDataOfRotatedGenerator) {
  Mat a(2, 2);
  a << 1.5, 0.5, 0.5, 1.5;
  DilationGroup g(a);
  // closed form: eigenvalues 1.5 -+ 0.5 with eigenvectors (1,-1)/sqrt2, (1,1)/sqrt2
  EXPECT_NEAR(g.alpha1(), 1.0, 1e-14);
  EXPECT_NEAR(g.alpha2(), 2.0, 1e-14);
  EXPECT_NEAR(g.nu(), 3.0, 1e-14);
  const Mat& q = g.eigenvectors();
  EXPECT_NEAR((q.transpose() * q - Mat::Identity(2, 2)).norm(), 0.0, 1e-12);
  // dilation of (1,1): eigenvalue 2 direction
  const Vec y = g.dilate(3.0, v2(1, 1));
  EXPECT_NEAR(y(0), 9.0, 1e-12);
  EXPECT_NEAR(y(1), 9.0, 1e-12);
}

TEST(Dilation, RejectsBadGenerators) {
  Mat a(2, 2);
  a << 1, 0.1, 0, 1;
  try {
    DilationGroup g(a);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonSymmetric);
  }
  try {
    DilationGroup g(diag2(1, -1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonPositiveSpectrum);
  }
  Mat b(2, 2);
  b << 1, 1e-12, 0, 1;
  EXPECT_NO_THROW(DilationGroup{b});
}

TEST(Dilation, DilateExamples) {
  DilationGroup id(Mat::Identity(2, 2));
  EXPECT_EQ(id.dilate(2.0, v2(1, 0)), v2(2, 0));
  DilationGroup g(diag2(1, 2));
  const Vec y = g.dilate(3.0, v2(1, 1));
  EXPECT_NEAR(y(0), 3.0, 1e-14);
  EXPECT_NEAR(y(1), 9.0, 1e-13);
  EXPECT_THROW(g.dilate(0.0, y), Error);
}

TEST(Dilation, GroupLaw) {
  Mat a(2, 2);
  a << 1.5, 0.5, 0.5, 1.5;
  DilationGroup g(a);
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    const Vec xi = rng.normal_vec(2);
    EXPECT_LE((g.dilate(2.0, g.dilate(3.0, xi)) - g.dilate(6.0, xi)).norm(), 1e-12 * (1 + 36 * xi.norm()));
    EXPECT_EQ(g.dilate(1.0, xi), xi);
  }
  EXPECT_EQ(g.dilate(5.0, Vec::Zero(2)), Vec::Zero(2));
}

TEST(Dilation, QuasiNormExamples) {
  DilationGroup id(Mat::Identity(2, 2));
  EXPECT_NEAR(id.quasi_norm(v2(3, 4)), 5.0, 1e-12);
  DilationGroup g(diag2(1, 2));
  EXPECT_NEAR(g.quasi_norm(v2(0, 9)), 3.0, 1e-12);
  EXPECT_EQ(g.quasi_norm(Vec::Zero(2)), 0.0);
  EXPECT_DOUBLE_EQ(g.bracket(Vec::Zero(2)), 1.0);
  EXPECT_NEAR(id.bracket(v2(3, 4)), 6.0, 1e-12);
  EXPECT_NEAR(g.bracket(v2(0, 9)), 4.0, 1e-12);
  DilationGroup one(Mat::Constant(1, 1, 2.0));
  EXPECT_NEAR(one.quasi_norm(Vec::Constant(1, -16.0)), 4.0, 1e-12);
}

TEST(Dilation, QuasiNormSolvesDefiningEquation) {
  // independent check of sigma * sum t^{-2 lambda_i} c_i^2 = 1 in the coordinate basis
  DilationGroup g(diag2(0.5, 3.0), 2.0);
  Rng rng(11);
  for (int i = 0; i < 1000; ++i) {
    const Vec xi = rng.normal_vec(2) * std::exp(rng.uniform(-5, 5));
    const double t = g.quasi_norm(xi);
    const double lhs = 2.0 * (std::pow(t, -1.0) * xi(0) * xi(0) + std::pow(t, -6.0) * xi(1) * xi(1));
    EXPECT_NEAR(lhs, 1.0, 1e-12);
  }
}

TEST(Dilation, Homogeneity) {
  Mat a(3, 3);
  a << 1.2, 0.3, 0.0, 0.3, 2.0, 0.1, 0.0, 0.1, 0.7;
  for (const Mat& gen : {diag2(1, 2), Mat(a)}) {
    DilationGroup g(gen);
    Rng rng(5);
    for (int i = 0; i < 2000; ++i) {
      const double t = std::exp2(rng.uniform(-6, 6));
      const Vec xi = rng.normal_vec(g.dim()) * std::exp(rng.uniform(-3, 3));
      const double n = g.quasi_norm(xi);
      EXPECT_LE(std::abs(g.quasi_norm(g.dilate(t, xi)) - t * n) / (t * n), 1e-9);
    }
  }
}

TEST(Dilation, EnvelopeBounds) {
  DilationGroup g(diag2(0.5, 2.5), 1.7);
  Rng rng(8);
  for (int i = 0; i < 5000; ++i) {
    const Vec xi = rng.normal_vec(2) * std::exp(rng.uniform(-4, 4));
    const auto [lo, hi] = g.envelope(xi.norm());
    const double n = g.quasi_norm(xi);
    EXPECT_LE(lo, n * (1 + 1e-12));
    EXPECT_GE(hi, n * (1 - 1e-12));
  }
}

TEST(Dilation, UnitBallIsEuclideanBall) {
  DilationGroup g(diag2(1, 2));
  Rng rng(2);
  for (int i = 0; i < 2000; ++i) {
    const Vec x = rng.normal_vec(2);
    if (std::abs(x.norm() - 1.0) < 1e-9) continue;
    EXPECT_EQ(g.quasi_norm(x) < 1.0, x.norm() < 1.0);
  }
}

TEST(Dilation, ContinuityAtZero) {
  DilationGroup g(diag2(1, 2));
  const Vec xi = v2(0.7, -1.3);
  double prev = g.quasi_norm(xi);
  for (int n = 2; n < 2000; n *= 2) {
    const double v = g.quasi_norm(g.dilate(1.0 / n, xi));
    EXPECT_LT(v, prev);
    prev = v;
  }
  EXPECT_LT(prev, 1e-2);
}

TEST(Dilation, BracketPowerSumsConverge) {
  // Riemann sums of <x>^{-nu-1/2} over boxes [-K,K]^2 with unit cells
  DilationGroup g(diag2(1, 2));
  auto sum = [&](int k) {
    double s = 0.0;
    for (int i = -k; i <= k; ++i)
      for (int j = -k * k; j <= k * k; ++j) s += std::pow(g.bracket(v2(i, j)), -g.nu() - 0.5);
    return s;
  };
  // shell increments decay like K^{-1/2}: ratio tends to 2^{-1/2}
  const double s1 = sum(16), s2 = sum(32), s3 = sum(64);
  const double i1 = s2 - s1, i2 = s3 - s2;
  EXPECT_GT(i1, 0.0);
  EXPECT_LT(i2 / i1, 0.8);
  EXPECT_LT(s3 + i2 / (1.0 - 0.8), 20.0);
}

TEST(Dilation, TriangleConstant) {
  DilationGroup id(Mat::Identity(2, 2));
  EXPECT_LE(id.triangle_constant_estimate(2000, 1), 1.0 + 1e-10);
  // all exponents >= 1: the quasi-norm is subadditive
  DilationGroup g(diag2(1, 2));
  EXPECT_LE(g.triangle_constant_estimate(2000, 1), 1.0 + 1e-10);
  // an exponent below 1 breaks subadditivity: |(0,2)|_A = 4 while |(0,1)|_A = 1
  DilationGroup h(diag2(1, 0.5));
  const double pair = h.quasi_norm(v2(0, 2)) / (2.0 * h.quasi_norm(v2(0, 1)));
  EXPECT_NEAR(pair, 2.0, 1e-12);
  EXPECT_GT(h.triangle_constant_estimate(2000, 1), 1.5);
  // prefix consistency
  double prev = 0.0;
  for (std::size_t n : {10, 100, 1000}) {
    const double e = h.triangle_constant_estimate(n, 9);
    EXPECT_GE(e, prev);
    prev = e;
  }
}
