#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace aniso {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using cplx = std::complex<double>;

enum class ErrorCode {
  InvalidArgument,
  NonSymmetric,
  NonPositiveSpectrum,
  NonPositiveScale,
  NonPositiveRadius,
  VerificationFailed,
  CoverageGap,
  HeightUnbounded,
  SingularWeight,
  NonIntegrable,
  FitDegenerate,
  TruncationNotConverged,
  SizeMismatch,
  SupportViolation,
  KernelInvalid,
  DenominatorVanishes,
  TruncationInsufficient,
  ConfigInvalid,
  ExperimentFailed,
};

inline const char* to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NonSymmetric: return "NonSymmetric";
    case ErrorCode::NonPositiveSpectrum: return "NonPositiveSpectrum";
    case ErrorCode::NonPositiveScale: return "NonPositiveScale";
    case ErrorCode::NonPositiveRadius: return "NonPositiveRadius";
    case ErrorCode::VerificationFailed: return "VerificationFailed";
    case ErrorCode::CoverageGap: return "CoverageGap";
    case ErrorCode::HeightUnbounded: return "HeightUnbounded";
    case ErrorCode::SingularWeight: return "SingularWeight";
    case ErrorCode::NonIntegrable: return "NonIntegrable";
    case ErrorCode::FitDegenerate: return "FitDegenerate";
    case ErrorCode::TruncationNotConverged: return "TruncationNotConverged";
    case ErrorCode::SizeMismatch: return "SizeMismatch";
    case ErrorCode::SupportViolation: return "SupportViolation";
    case ErrorCode::KernelInvalid: return "KernelInvalid";
    case ErrorCode::DenominatorVanishes: return "DenominatorVanishes";
    case ErrorCode::TruncationInsufficient: return "TruncationInsufficient";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::ExperimentFailed: return "ExperimentFailed";
  }
  return "Unknown";
}

// Unevaluated sum hi + lo with |lo| <= ulp(hi)/2 (double-double). Used where a
// node sits closer to a nonzero singular point than one ulp of its coordinate.
struct DD {
  double hi = 0.0;
  double lo = 0.0;
  double value() const { return hi + lo; }
};

inline DD two_sum(double a, double b) {
  const double s = a + b, bb = s - a;
  return {s, (a - (s - bb)) + (b - bb)};
}
inline DD two_prod(double a, double b) {
  const double p = a * b;
  return {p, std::fma(a, b, -p)};
}
inline DD normalize(double hi, double lo) {
  const double s = hi + lo;
  return {s, lo - (s - hi)};
}
inline DD operator+(DD a, DD b) {
  const DD s = two_sum(a.hi, b.hi);
  return normalize(s.hi, s.lo + a.lo + b.lo);
}
inline DD operator-(DD a) { return {-a.hi, -a.lo}; }
inline DD operator-(DD a, DD b) { return a + (-b); }
inline DD operator*(DD a, DD b) {
  const DD p = two_prod(a.hi, b.hi);
  return normalize(p.hi, p.lo + a.hi * b.lo + a.lo * b.hi);
}
inline DD operator*(DD a, double b) { return a * DD{b, 0.0}; }

// Point with double-double coordinates; fixed capacity keeps evaluation off the heap.
struct DDPoint {
  static constexpr int kMax = 8;
  DD c[kMax];
  int n = 0;

  static DDPoint from(const Vec& x, double lo0 = 0.0) {
    DDPoint p;
    p.n = static_cast<int>(x.size());
    if (p.n > kMax) throw std::length_error("DDPoint: dimension above 8");
    for (int i = 0; i < p.n; ++i) p.c[i] = {x(i), 0.0};
    if (p.n > 0 && lo0 != 0.0) p.c[0] = normalize(x(0), lo0);
    return p;
  }
  Vec hi() const {
    Vec v(n);
    for (int i = 0; i < n; ++i) v(i) = c[i].hi;
    return v;
  }
  int size() const { return n; }
  const DD& operator[](int i) const { return c[i]; }
  DD& operator[](int i) { return c[i]; }
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// Value with an attached absolute error estimate.
struct Estimate {
  double value = 0.0;
  double error = 0.0;
};

// mt19937_64 output is fixed by the standard; the conversions below are ours so
// streams agree across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}
  std::uint64_t next() { return eng_(); }
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }
  Vec normal_vec(int d) {
    Vec v(d);
    for (int i = 0; i < d; ++i) v(i) = normal();
    return v;
  }
  Vec unit_vec(int d) {
    Vec v = normal_vec(d);
    double n = v.norm();
    while (n == 0.0) {
      v = normal_vec(d);
      n = v.norm();
    }
    return v / n;
  }

 private:
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline double radical_inverse(std::uint64_t index, int base) {
  double inv = 1.0 / base, f = inv, r = 0.0;
  while (index > 0) {
    r += f * static_cast<double>(index % base);
    index /= base;
    f *= inv;
  }
  return r;
}

// Halton point in [0,1)^d, index starts at 1 to skip the origin.
inline Vec halton(std::uint64_t index, int d, std::uint64_t offset = 0) {
  static constexpr int primes[] = {2, 3, 5, 7, 11, 13};
  Vec x(d);
  for (int i = 0; i < d; ++i) x(i) = radical_inverse(index + offset + 1, primes[i]);
  return x;
}

inline double unit_ball_volume(int d) {
  return std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d + 1.0);
}

inline double spectral_norm(const CMat& m) {
  if (m.rows() == 1 && m.cols() == 1) return std::abs(m(0, 0));
  if (m.rows() == 2 && m.cols() == 2) {
    const double f = std::norm(m(0, 0)) + std::norm(m(0, 1)) + std::norm(m(1, 0)) + std::norm(m(1, 1));
    const double det = std::norm(m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0));
    const double disc = std::max(0.0, f * f - 4.0 * det);
    return std::sqrt(0.5 * (f + std::sqrt(disc)));
  }
  Eigen::JacobiSVD<CMat> svd(m);
  return svd.singularValues()(0);
}

inline double spectral_norm(const Mat& m) { return spectral_norm(CMat(m.cast<cplx>())); }

// Gauss-Legendre nodes and weights on [-1,1] by Golub-Welsch.
struct GaussRule {
  Vec nodes;
  Vec weights;
};

inline GaussRule gauss_legendre(int n) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "Gauss-Legendre order must be positive");
  Mat J = Mat::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double b = k / std::sqrt(4.0 * k * k - 1.0);
    J(k, k - 1) = b;
    J(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(J);
  GaussRule r{es.eigenvalues(), Vec(n)};
  for (int k = 0; k < n; ++k) r.weights(k) = 2.0 * es.eigenvectors()(0, k) * es.eigenvectors()(0, k);
  return r;
}

inline const GaussRule& cached_gauss_legendre(int n) {
  static thread_local std::vector<GaussRule> cache;
  if (static_cast<int>(cache.size()) <= n) cache.resize(n + 1);
  if (cache[n].nodes.size() != n) cache[n] = gauss_legendre(n);
  return cache[n];
}

// Worker cap shared by all data-parallel loops.
inline std::atomic<int>& default_jobs() {
  static std::atomic<int> jobs{1};
  return jobs;
}

// Static contiguous partition; results must be written to per-index slots so the
// outcome does not depend on the worker count.
inline void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body, int jobs = 0) {
  if (jobs <= 0) jobs = default_jobs().load();
  jobs = std::max(1, std::min<int>(jobs, static_cast<int>(std::min<std::size_t>(count, 256))));
  if (jobs <= 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errs(jobs);
  std::vector<std::thread> pool;
  for (int w = 0; w < jobs; ++w) {
    pool.emplace_back([&, w] {
      const std::size_t lo = count * w / jobs, hi = count * (w + 1) / jobs;
      try {
        for (std::size_t i = lo; i < hi; ++i) body(i);
      } catch (...) {
        errs[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
}

}  // namespace aniso
