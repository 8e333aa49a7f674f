#pragma once

#include "aniso/core.hpp"

namespace aniso {

// One-parameter group delta_t = exp(A ln t) for symmetric positive A, with the
// quasi-norm induced by the quadratic form sigma * I in the eigenbasis.
class DilationGroup {
 public:
  explicit DilationGroup(const Mat& generator, double p_scale = 1.0) {
    if (generator.rows() != generator.cols() || generator.rows() < 1)
      throw Error(ErrorCode::InvalidArgument, "generator must be a nonempty square matrix");
    if (!(p_scale > 0.0)) throw Error(ErrorCode::NonPositiveScale, "p_scale must be positive");
    const double defect = (generator - generator.transpose()).cwiseAbs().maxCoeff();
    if (defect > 1e-10) throw Error(ErrorCode::NonSymmetric, "generator asymmetry " + std::to_string(defect));
    a_ = 0.5 * (generator + generator.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> es(a_);
    lambda_ = es.eigenvalues();
    q_ = es.eigenvectors();
    if (lambda_.minCoeff() <= 0.0) throw Error(ErrorCode::NonPositiveSpectrum, "generator eigenvalues must be positive");
    sigma_ = p_scale;
    nu_ = lambda_.sum();
    isotropic_ = lambda_.maxCoeff() - lambda_.minCoeff() <= 1e-14 * lambda_.maxCoeff();
    diagonal_ = a_.isDiagonal(0.0);
    if (diagonal_) {
      // keep the coordinate basis so dilations of axis vectors are exact
      lambda_ = a_.diagonal();
      q_ = Mat::Identity(dim(), dim());
    }
  }

  int dim() const { return static_cast<int>(a_.rows()); }
  const Mat& generator() const { return a_; }
  const Vec& eigenvalues() const { return lambda_; }
  const Mat& eigenvectors() const { return q_; }
  double nu() const { return nu_; }
  double alpha1() const { return lambda_.minCoeff(); }
  double alpha2() const { return lambda_.maxCoeff(); }
  double p_scale() const { return sigma_; }
  bool isotropic() const { return isotropic_; }

  Mat dilation_matrix(double t) const {
    if (!(t > 0.0)) throw Error(ErrorCode::NonPositiveScale, "dilation scale must be positive");
    Vec s(dim());
    for (int i = 0; i < dim(); ++i) s(i) = std::pow(t, lambda_(i));
    if (diagonal_) return s.asDiagonal();
    return q_ * s.asDiagonal() * q_.transpose();
  }

  Vec dilate(double t, const Vec& xi) const {
    if (!(t > 0.0)) throw Error(ErrorCode::NonPositiveScale, "dilation scale must be positive");
    if (t == 1.0) return xi;
    if (diagonal_) {
      Vec r(dim());
      for (int i = 0; i < dim(); ++i) r(i) = std::pow(t, lambda_(i)) * xi(i);
      return r;
    }
    Vec c = q_.transpose() * xi;
    for (int i = 0; i < dim(); ++i) c(i) *= std::pow(t, lambda_(i));
    return q_ * c;
  }

  double quasi_norm(const Vec& xi) const {
    const int d = dim();
    double w[8];
    std::vector<double> wbig;
    double* wp = w;
    if (d > 8) {
      wbig.resize(d);
      wp = wbig.data();
    }
    double rho2 = 0.0;
    if (diagonal_) {
      for (int i = 0; i < d; ++i) wp[i] = sigma_ * xi(i) * xi(i);
    } else {
      const Vec c = q_.transpose() * xi;
      for (int i = 0; i < d; ++i) wp[i] = sigma_ * c(i) * c(i);
    }
    for (int i = 0; i < d; ++i) rho2 += wp[i];
    if (rho2 == 0.0) return 0.0;
    const double log_rho = 0.5 * std::log(rho2);
    if (isotropic_ || d == 1) return std::exp(log_rho / lambda_(0));
    return std::exp(solve_log_t(wp, log_rho));
  }

  double bracket(const Vec& xi) const { return 1.0 + quasi_norm(xi); }
  double distance(const Vec& x, const Vec& y) const { return quasi_norm(x - y); }

  // Envelope for r = sqrt(sigma)|xi|: returns (lower, upper) bounds of the quasi-norm.
  std::pair<double, double> envelope(double euclid) const {
    const double r = std::sqrt(sigma_) * euclid;
    if (r == 0.0) return {0.0, 0.0};
    const double a = std::pow(r, 1.0 / alpha1()), b = std::pow(r, 1.0 / alpha2());
    return {std::min(a, b), std::max(a, b)};
  }

  // Max of |xi+zeta|/(|xi|+|zeta|) over sampled pairs; prefix-consistent in n.
  double triangle_constant_estimate(std::size_t n_samples, std::uint64_t seed) const {
    if (n_samples < 1) throw Error(ErrorCode::InvalidArgument, "n_samples must be >= 1");
    Rng rng(seed);
    double best = 0.0;
    for (std::size_t k = 0; k < n_samples; ++k) {
      const Vec xi = rng.unit_vec(dim()) * std::exp(rng.uniform(-4.0, 4.0));
      const Vec zeta = rng.unit_vec(dim()) * std::exp(rng.uniform(-4.0, 4.0));
      const double den = quasi_norm(xi) + quasi_norm(zeta);
      if (den > 0.0) best = std::max(best, quasi_norm(xi + zeta) / den);
    }
    return best;
  }

 private:
  // Solves log(sum_i w_i exp(-2 lambda_i s)) = 0 for s = log t. The function is
  // strictly decreasing, so a Newton step is taken only inside the current bracket.
  double solve_log_t(const double* w, double log_rho) const {
    const int d = dim();
    auto h = [&](double s, double* dh) {
      double m = -std::numeric_limits<double>::infinity();
      for (int i = 0; i < d; ++i)
        if (w[i] > 0.0) m = std::max(m, std::log(w[i]) - 2.0 * lambda_(i) * s);
      double sum = 0.0, dsum = 0.0;
      for (int i = 0; i < d; ++i) {
        if (w[i] <= 0.0) continue;
        const double e = std::exp(std::log(w[i]) - 2.0 * lambda_(i) * s - m);
        sum += e;
        dsum += -2.0 * lambda_(i) * e;
      }
      *dh = dsum / sum;
      return m + std::log(sum);
    };
    double lo = std::min(log_rho / alpha1(), log_rho / alpha2());
    double hi = std::max(log_rho / alpha1(), log_rho / alpha2());
    double s = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
      double dh;
      const double v = h(s, &dh);
      if (std::abs(v) <= 1e-14) break;
      if (v > 0.0)
        lo = s;
      else
        hi = s;
      double next = s - v / dh;
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (next == s || hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(s))) {
        s = next;
        break;
      }
      s = next;
    }
    return s;
  }

  Mat a_;
  Vec lambda_;
  Mat q_;
  double sigma_ = 1.0;
  double nu_ = 0.0;
  bool isotropic_ = false;
  bool diagonal_ = false;
};

}  // namespace aniso
