#pragma once

#include "aniso/core.hpp"

#include <unsupported/Eigen/Polynomials>

#include <map>
#include <memory>
#include <sstream>

namespace aniso {

// Real polynomial in d variables, stored as multi-index -> coefficient.
struct Polynomial {
  std::map<std::vector<int>, double> terms;

  static Polynomial coordinate(int d, int axis) {
    std::vector<int> a(d, 0);
    a[axis] = 1;
    return Polynomial{{{a, 1.0}}};
  }

  int degree() const {
    int k = 0;
    for (const auto& [a, c] : terms) {
      if (c == 0.0) continue;
      int s = 0;
      for (int e : a) s += e;
      k = std::max(k, s);
    }
    return k;
  }

  double operator()(const Vec& x) const {
    double v = 0.0;
    for (const auto& [a, c] : terms) {
      double m = c;
      for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] != 0) m *= std::pow(x(static_cast<int>(i)), a[i]);
      v += m;
    }
    return v;
  }

  DD operator()(const DDPoint& x) const {
    DD v;
    for (const auto& [a, c] : terms) {
      DD m{c, 0.0};
      for (std::size_t i = 0; i < a.size(); ++i)
        for (int k = 0; k < a[i]; ++k) m = m * x[static_cast<int>(i)];
      v = v + m;
    }
    return v;
  }

  // d/dx of a univariate polynomial.
  double derivative_1d(double x) const {
    double v = 0.0;
    for (const auto& [a, c] : terms)
      if (!a.empty() && a[0] > 0) v += c * a[0] * std::pow(x, a[0] - 1);
    return v;
  }

  // Real roots, polished to double-double by Newton steps with a compensated residual.
  std::vector<DD> real_roots_dd() const {
    std::vector<DD> out;
    for (double r : real_roots()) {
      DD x{r, 0.0};
      for (int it = 0; it < 3; ++it) {
        const double fp = derivative_1d(x.hi);
        if (!(std::abs(fp) > 0.0) || !std::isfinite(fp)) break;
        x = x + DD{-(*this)(DDPoint::from(Vec::Constant(1, x.hi), x.lo)).value() / fp, 0.0};
      }
      out.push_back(x);
    }
    return out;
  }

  // Real roots for a univariate polynomial.
  std::vector<double> real_roots() const {
    const int k = degree();
    if (k == 0) return {};
    Vec coeff = Vec::Zero(k + 1);
    for (const auto& [a, c] : terms) coeff(a.empty() ? 0 : a[0]) += c;
    std::vector<double> roots;
    if (k == 1) {
      roots.push_back(-coeff(0) / coeff(1));
      return roots;
    }
    Eigen::PolynomialSolver<double, Eigen::Dynamic> solver;
    solver.compute(coeff);
    for (int i = 0; i < solver.roots().size(); ++i) {
      const auto r = solver.roots()(i);
      if (std::abs(r.imag()) <= 1e-9 * std::max(1.0, std::abs(r.real()))) roots.push_back(r.real());
    }
    std::sort(roots.begin(), roots.end());
    return roots;
  }
};

// Affine precomposition x -> M x + b.
struct AffinePre {
  Mat m;
  Vec b;
  bool identity = true;

  Vec apply(const Vec& x) const { return identity ? x : Vec(m * x + b); }
  DDPoint apply(const DDPoint& x) const {
    if (identity) return x;
    DDPoint y;
    y.n = static_cast<int>(m.rows());
    for (int i = 0; i < y.n; ++i) {
      DD acc{b(i), 0.0};
      for (int j = 0; j < x.n; ++j) acc = acc + x[j] * m(i, j);
      y[i] = acc;
    }
    return y;
  }
  // Preimage level of y under the first coordinate map (diagonal pre).
  DD preimage_level(DD y) const {
    if (identity) return y;
    const double mm = m(0, 0), bb = b(0);
    const double q = (y.hi - bb) / mm;
    const DD r = y - DD{bb, 0.0} - two_prod(mm, q);
    return normalize(q, r.value() / mm);
  }
  // this applied after `inner`: x -> this(inner(x))
  AffinePre compose_inner(const Mat& mi, const Vec& bi) const {
    if (identity) return {mi, bi, false};
    return {m * mi, m * bi + b, false};
  }
};

class ScalarWeight {
 public:
  enum class Kind { Constant, RadialPower, PolyAbsPower, Product };

  static ScalarWeight constant(double value) {
    if (!(value > 0.0)) throw Error(ErrorCode::InvalidArgument, "constant weight must be positive");
    ScalarWeight w;
    w.kind_ = Kind::Constant;
    w.value_ = value;
    return w;
  }
  static ScalarWeight radial_power(double gamma) {
    ScalarWeight w;
    w.kind_ = Kind::RadialPower;
    w.value_ = gamma;
    return w;
  }
  static ScalarWeight poly_abs_power(Polynomial p, double beta) {
    ScalarWeight w;
    w.kind_ = Kind::PolyAbsPower;
    w.poly_ = std::move(p);
    w.value_ = beta;
    return w;
  }
  static ScalarWeight product(std::vector<ScalarWeight> factors) {
    ScalarWeight w;
    w.kind_ = Kind::Product;
    w.factors_ = std::make_shared<const std::vector<ScalarWeight>>(std::move(factors));
    return w;
  }

  Kind kind() const { return kind_; }
  double exponent() const { return value_; }
  const Polynomial& polynomial() const { return poly_; }

  // lo0 is the low part of the first coordinate (see DD).
  double operator()(const Vec& x0, double lo0 = 0.0) const {
    if (lo0 == 0.0 && pre_.identity && kind_ != Kind::Product) {
      switch (kind_) {
        case Kind::Constant: return value_;
        case Kind::RadialPower: return value_ == 0.0 ? 1.0 : std::pow(x0.norm(), value_);
        default: break;
      }
    }
    return (*this)(DDPoint::from(x0, lo0));
  }

  double operator()(const DDPoint& x0) const {
    const DDPoint x = pre_.apply(x0);
    switch (kind_) {
      case Kind::Constant: return value_;
      case Kind::RadialPower: {
        if (value_ == 0.0) return 1.0;
        double r2 = 0.0;
        for (int i = 0; i < x.n; ++i) r2 += x[i].hi * x[i].hi;
        return std::pow(std::sqrt(r2), value_);
      }
      case Kind::PolyAbsPower: return value_ == 0.0 ? 1.0 : std::pow(std::abs(poly_(x).value()), value_);
      case Kind::Product: {
        double v = 1.0;
        for (const auto& f : *factors_) v *= f(x);
        return v;
      }
    }
    return 0.0;
  }

  int degree() const {
    if (kind_ == Kind::PolyAbsPower) return poly_.degree();
    if (kind_ == Kind::Product) {
      int k = 0;
      for (const auto& f : *factors_) k += f.degree();
      return k;
    }
    return 0;
  }

  // Whether w^power is locally integrable in dimension d (worst case over root multiplicity).
  bool locally_integrable(int d, double power = 1.0) const {
    switch (kind_) {
      case Kind::Constant: return true;
      case Kind::RadialPower: return value_ * power > -d;
      case Kind::PolyAbsPower: {
        const double e = value_ * power;
        return e >= 0.0 || poly_.degree() * e > -1.0;
      }
      case Kind::Product:
        for (const auto& f : *factors_)
          if (!f.locally_integrable(d, power)) return false;
        return true;
    }
    return false;
  }

  // Levels of the first coordinate where a 1-d weight vanishes or blows up.
  std::vector<DD> singular_levels_1d() const {
    std::vector<DD> base;
    switch (kind_) {
      case Kind::Constant: break;
      case Kind::RadialPower:
        if (value_ != 0.0) base.push_back({0.0, 0.0});
        break;
      case Kind::PolyAbsPower:
        if (value_ != 0.0) base = poly_.real_roots_dd();
        break;
      case Kind::Product:
        for (const auto& f : *factors_) {
          auto s = f.singular_levels_1d();
          base.insert(base.end(), s.begin(), s.end());
        }
        break;
    }
    for (DD& y : base) y = pre_.preimage_level(y);
    return unique_levels(std::move(base));
  }

  std::vector<double> singular_points_1d() const {
    std::vector<double> out;
    for (const DD& l : singular_levels_1d()) out.push_back(l.hi);
    return out;
  }

  static std::vector<DD> unique_levels(std::vector<DD> v) {
    std::sort(v.begin(), v.end(), [](const DD& a, const DD& b) { return a.hi < b.hi || (a.hi == b.hi && a.lo < b.lo); });
    v.erase(std::unique(v.begin(), v.end(), [](const DD& a, const DD& b) { return a.hi == b.hi; }), v.end());
    return v;
  }

  // (w o T)(x) = w(M x + b)
  ScalarWeight pullback(const Mat& m, const Vec& b) const {
    ScalarWeight w = *this;
    w.pre_ = pre_.compose_inner(m, b);
    return w;
  }

  std::string describe() const {
    std::ostringstream os;
    switch (kind_) {
      case Kind::Constant: os << "constant(" << value_ << ")"; break;
      case Kind::RadialPower: os << "|x|^" << value_; break;
      case Kind::PolyAbsPower: os << "|P|^" << value_ << " deg " << poly_.degree(); break;
      case Kind::Product: {
        os << "product(";
        for (std::size_t i = 0; i < factors_->size(); ++i) os << (i ? "," : "") << (*factors_)[i].describe();
        os << ")";
        break;
      }
    }
    if (!pre_.identity) os << " o affine";
    return os.str();
  }

 private:
  Kind kind_ = Kind::Constant;
  double value_ = 1.0;
  Polynomial poly_;
  std::shared_ptr<const std::vector<ScalarWeight>> factors_;
  AffinePre pre_;
};

struct WeightSample {
  Vec x;
  CMat value;
  Vec eigenvalues;
  CMat eigenvectors;
};

class MatrixWeight {
 public:
  enum class Mode { Diagonal, Conjugated, DiagDominant };

  static MatrixWeight diagonal(std::vector<ScalarWeight> entries) {
    MatrixWeight w;
    w.mode_ = Mode::Diagonal;
    w.entries_ = std::move(entries);
    return w;
  }
  static MatrixWeight scalar(ScalarWeight s) { return diagonal({std::move(s)}); }
  static MatrixWeight identity(int n) { return diagonal(std::vector<ScalarWeight>(n, ScalarWeight::constant(1.0))); }
  static MatrixWeight conjugated(const CMat& u, std::vector<ScalarWeight> entries) {
    if (u.rows() != static_cast<int>(entries.size()) || u.cols() != u.rows())
      throw Error(ErrorCode::SizeMismatch, "conjugator size does not match diagonal");
    if ((u * u.adjoint() - CMat::Identity(u.rows(), u.rows())).norm() > 1e-10)
      throw Error(ErrorCode::InvalidArgument, "conjugator is not unitary");
    MatrixWeight w;
    w.mode_ = Mode::Conjugated;
    w.entries_ = std::move(entries);
    w.u_ = u;
    return w;
  }
  // W_ij = eps * min(w_i, w_j)/(N-1) * P_ij/(1+|P_ij|) for i<j (P listed row-major over
  // the upper triangle); strict diagonal dominance for eps < 1.
  static MatrixWeight diag_dominant(std::vector<ScalarWeight> entries, std::vector<Polynomial> offdiag, double eps) {
    const std::size_t n = entries.size();
    if (!(eps > 0.0 && eps < 1.0)) throw Error(ErrorCode::InvalidArgument, "dominance factor must lie in (0,1)");
    if (offdiag.size() != n * (n - 1) / 2) throw Error(ErrorCode::SizeMismatch, "off-diagonal count mismatch");
    MatrixWeight w;
    w.mode_ = Mode::DiagDominant;
    w.entries_ = std::move(entries);
    w.offdiag_ = std::move(offdiag);
    w.eps_ = eps;
    return w;
  }

  int size() const { return static_cast<int>(entries_.size()); }
  Mode mode() const { return mode_; }
  bool is_diagonal() const { return mode_ == Mode::Diagonal; }
  const std::vector<ScalarWeight>& entries() const { return entries_; }

  // lo0 is the low part of the first coordinate (see DD).
  Vec diagonal_values(const Vec& x0, double lo0 = 0.0) const {
    const DDPoint x = pre_.apply(DDPoint::from(x0, lo0));
    Vec v(size());
    for (int i = 0; i < size(); ++i) v(i) = entries_[i](x);
    return v;
  }

  CMat value(const Vec& x0, double lo0 = 0.0) const {
    const DDPoint xd = pre_.apply(DDPoint::from(x0, lo0));
    const Vec x = xd.hi();
    const int n = size();
    Vec d(n);
    for (int i = 0; i < n; ++i) d(i) = entries_[i](xd);
    switch (mode_) {
      case Mode::Diagonal: return d.cast<cplx>().asDiagonal();
      case Mode::Conjugated: return u_ * d.cast<cplx>().asDiagonal() * u_.adjoint();
      case Mode::DiagDominant: {
        CMat m = d.cast<cplx>().asDiagonal();
        std::size_t k = 0;
        for (int i = 0; i < n; ++i)
          for (int j = i + 1; j < n; ++j, ++k) {
            const double p = offdiag_[k](x);
            const double v = eps_ * std::min(d(i), d(j)) / (n - 1) * p / (1.0 + std::abs(p));
            m(i, j) = v;
            m(j, i) = v;
          }
        return m;
      }
    }
    return {};
  }

  WeightSample sample(const Vec& x, double lo0 = 0.0) const {
    WeightSample s;
    s.x = x;
    s.value = value(x, lo0);
    Eigen::SelfAdjointEigenSolver<CMat> es(s.value);
    s.eigenvalues = es.eigenvalues();
    s.eigenvectors = es.eigenvectors();
    return s;
  }

  // Hermitian power W(x)^a with the eigenvalue floor 1e-14 tr/N.
  CMat power(const Vec& x, double a, double lo0 = 0.0) const {
    const int n = size();
    if (mode_ == Mode::Diagonal || mode_ == Mode::Conjugated) {
      Vec d = diagonal_values(x, lo0);
      clamp(d);
      Eigen::VectorXcd p(n);
      for (int i = 0; i < n; ++i) p(i) = std::pow(d(i), a);
      if (mode_ == Mode::Diagonal) return p.asDiagonal();
      return u_ * p.asDiagonal() * u_.adjoint();
    }
    WeightSample s = sample(x, lo0);
    clamp(s.eigenvalues);
    Eigen::VectorXcd p(n);
    for (int i = 0; i < n; ++i) p(i) = std::pow(s.eigenvalues(i), a);
    return s.eigenvectors * p.asDiagonal() * s.eigenvectors.adjoint();
  }

  // Entry powers for the diagonal mode; same floor as power().
  Vec diagonal_power(const Vec& x, double a, double lo0 = 0.0) const {
    Vec d = diagonal_values(x, lo0);
    clamp(d);
    for (int i = 0; i < d.size(); ++i) d(i) = std::pow(d(i), a);
    return d;
  }

  MatrixWeight pullback(const Mat& m, const Vec& b) const {
    MatrixWeight w = *this;
    w.pre_ = pre_.compose_inner(m, b);
    return w;
  }

  std::vector<DD> singular_levels_1d() const {
    std::vector<DD> pts;
    for (const auto& e : entries_) {
      auto s = e.singular_levels_1d();
      pts.insert(pts.end(), s.begin(), s.end());
    }
    for (DD& y : pts) y = pre_.preimage_level(y);
    return ScalarWeight::unique_levels(std::move(pts));
  }

  std::vector<double> singular_points_1d() const {
    std::vector<double> out;
    for (const DD& l : singular_levels_1d()) out.push_back(l.hi);
    return out;
  }

  bool locally_integrable(int d, double power = 1.0) const {
    for (const auto& e : entries_)
      if (!e.locally_integrable(d, power)) return false;
    return true;
  }

  std::string describe() const {
    std::ostringstream os;
    os << (mode_ == Mode::Diagonal ? "diag" : mode_ == Mode::Conjugated ? "conj" : "dd") << "(";
    for (int i = 0; i < size(); ++i) os << (i ? "," : "") << entries_[i].describe();
    os << ")";
    if (!pre_.identity) os << " o affine";
    return os.str();
  }

 private:
  static void clamp(Vec& ev) {
    if (ev.minCoeff() < 1e-300)
      throw Error(ErrorCode::SingularWeight, "weight eigenvalue below hard floor; perturb the node");
    const double floor = 1e-14 * ev.sum() / ev.size();
    for (int i = 0; i < ev.size(); ++i) ev(i) = std::max(ev(i), floor);
  }

  Mode mode_ = Mode::Diagonal;
  std::vector<ScalarWeight> entries_;
  std::vector<Polynomial> offdiag_;
  CMat u_;
  double eps_ = 0.0;
  AffinePre pre_;
};

inline bool matrix_norm_equivalence_check(const CMat& m, double r) {
  const int n = static_cast<int>(m.cols());
  double sum = 0.0;
  for (int j = 0; j < n; ++j) sum += std::pow(m.col(j).norm(), r);
  const double nr = std::pow(spectral_norm(m), r);
  const double tol = 1e-12 * std::max(1.0, nr);
  return sum / n <= nr + tol && nr <= std::pow(n, 0.5 * r) * sum + tol;
}

inline bool polynomial_ap_validity(int k, double beta, double p) { return -1.0 < k * beta && k * beta < p - 1.0; }

}  // namespace aniso
