#ifndef NCSCALE_PD_MANIFOLD_HPP_
#define NCSCALE_PD_MANIFOLD_HPP_

// Geometry of the cone P_n of positive definite Hermitian matrices viewed as
// the symmetric space GL_n / U_n, with the GL_n-invariant Finsler metrics
//
//   ||H||_{v,X} = ||X^{-1/2} H X^{-1/2}||_v,
//   d_v(X, Y)   = ||log(X^{-1/2} Y X^{-1/2})||_v.
//
// d_2-geodesics realize every d_v, so closed-form geodesics suffice for all
// distance computations.

#include <cmath>
#include <sstream>

#include "ncscale/linalg.hpp"

namespace ncscale {

// Relative positivity tolerance: accepted iff lambda_min > kPdTolerance *
// lambda_max.
inline constexpr double kPdTolerance = 1e-13;

class PDPoint {
 public:
  explicit PDPoint(const Hermitian& x) : x_(x), spectrum_(herm_eig(x)) {
    const int n = x.dim();
    if (n == 0) throw InvalidInput("PDPoint: empty matrix");
    const double hi = spectrum_.eigenvalues(0);
    const double lo = spectrum_.eigenvalues(n - 1);
    if (!(hi > 0.0) || !(lo > kPdTolerance * hi)) {
      std::ostringstream os;
      os << "PDPoint: not positive definite within tolerance (lambda_min = "
         << lo << ", lambda_max = " << hi << ")";
      throw DomainError(os.str(), lo, hi > 0.0 ? lo / hi : 0.0);
    }
  }

  explicit PDPoint(const ComplexMatrix& x) : PDPoint(Hermitian(x)) {}

  static PDPoint identity(int n) { return PDPoint(Hermitian::identity(n)); }

  int dim() const { return x_.dim(); }
  const Hermitian& hermitian() const { return x_; }
  const ComplexMatrix& matrix() const { return x_.matrix(); }
  const SpectralDecomposition& spectrum() const { return spectrum_; }

  ComplexMatrix sqrt() const {
    return apply_spectral(spectrum_, [](double t) { return std::sqrt(t); });
  }
  ComplexMatrix inv_sqrt() const {
    return apply_spectral(spectrum_,
                          [](double t) { return 1.0 / std::sqrt(t); });
  }
  ComplexMatrix inverse() const {
    return apply_spectral(spectrum_, [](double t) { return 1.0 / t; });
  }
  Hermitian log() const {
    return Hermitian::symmetrized(
        apply_spectral(spectrum_, [](double t) { return std::log(t); }));
  }
  double log_det() const { return spectrum_.eigenvalues.array().log().sum(); }

 private:
  Hermitian x_;
  SpectralDecomposition spectrum_;
};

struct TangentVector {
  PDPoint base;
  Hermitian direction;
};

struct CotangentVector {
  PDPoint base;
  Hermitian form;
};

inline void require_same_dim(int a, int b, const char* what) {
  if (a != b) throw DimensionMismatch(std::string(what) + ": size mismatch");
}

// g X g^dagger.
inline Hermitian congruence(const ComplexMatrix& g, const Hermitian& x) {
  return Hermitian::symmetrized(g * x.matrix() * g.adjoint());
}

// gamma(t) = X^{1/2} exp(t X^{-1/2} H X^{-1/2}) X^{1/2}; gamma(0) = X and
// gamma'(0) = H.
inline PDPoint geodesic(const PDPoint& x, const Hermitian& h, double t) {
  require_same_dim(x.dim(), h.dim(), "geodesic");
  if (t == 0.0) return x;
  const ComplexMatrix r = x.sqrt();
  const ComplexMatrix ri = x.inv_sqrt();
  const Hermitian inner = Hermitian::symmetrized(t * (ri * h.matrix() * ri));
  return PDPoint(Hermitian::symmetrized(r * mat_exp(inner) * r));
}

// Unit-parameter geodesic from X to Y: gamma(0) = X, gamma(1) = Y.
inline PDPoint geodesic_between(const PDPoint& x, const PDPoint& y, double t) {
  require_same_dim(x.dim(), y.dim(), "geodesic_between");
  const ComplexMatrix r = x.sqrt();
  const ComplexMatrix ri = x.inv_sqrt();
  const Hermitian rel = Hermitian::symmetrized(ri * y.matrix() * ri);
  const Hermitian l = mat_log(rel);
  return PDPoint(Hermitian::symmetrized(r * mat_exp(t * l) * r));
}

inline double finsler_dist(const PDPoint& x, const PDPoint& y,
                           const PermInvariantNorm& v) {
  require_same_dim(x.dim(), y.dim(), "finsler_dist");
  const ComplexMatrix ri = x.inv_sqrt();
  const Hermitian rel = Hermitian::symmetrized(ri * y.matrix() * ri);
  RealVector ev = herm_eig(rel).eigenvalues;
  if (!(ev.minCoeff() > 0.0)) {
    throw DomainError("finsler_dist: relative matrix not positive definite",
                      ev.minCoeff());
  }
  return v(ev.array().log().matrix());
}

inline double tangent_norm(const PDPoint& x, const Hermitian& h,
                           const PermInvariantNorm& v) {
  require_same_dim(x.dim(), h.dim(), "tangent_norm");
  const ComplexMatrix ri = x.inv_sqrt();
  return schatten_norm(Hermitian::symmetrized(ri * h.matrix() * ri), v);
}

// ||F||^*_{v,X} = ||X^{1/2} F X^{1/2}||_{v*}.
inline double cotangent_dual_norm(const PDPoint& x, const Hermitian& f,
                                  const PermInvariantNorm& v) {
  require_same_dim(x.dim(), f.dim(), "cotangent_dual_norm");
  const ComplexMatrix r = x.sqrt();
  return dual_norm(Hermitian::symmetrized(r * f.matrix() * r), v);
}

// Slope of a differentiable d_v-convex function: the dual norm of its
// differential at the base point.
inline double slope(const CotangentVector& df, const PermInvariantNorm& v) {
  return cotangent_dual_norm(df.base, df.form, v);
}

}  // namespace ncscale

#endif  // NCSCALE_PD_MANIFOLD_HPP_
