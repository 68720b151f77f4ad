#ifndef NCSCALE_LINALG_HPP_
#define NCSCALE_LINALG_HPP_

// Dense complex matrix primitives, Hermitian spectral calculus and the
// unitarily invariant norms ||H||_v = v(lambda(H)) induced by permutation
// invariant norms v on R^n.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "ncscale/errors.hpp"

namespace ncscale {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline void require_finite(const ComplexMatrix& m, const char* what) {
  if (!m.allFinite()) {
    throw InvalidInput(std::string(what) + ": non-finite entries");
  }
}

// A complex n x n matrix equal to its conjugate transpose. The constructor
// symmetrizes its argument and rejects inputs whose anti-Hermitian part is
// larger than 1e-8 relative to the whole matrix.
class Hermitian {
 public:
  Hermitian() = default;

  explicit Hermitian(const ComplexMatrix& m) {
    if (m.rows() != m.cols()) {
      throw DimensionMismatch("Hermitian: matrix is not square");
    }
    require_finite(m, "Hermitian");
    const double anti = (0.5 * (m - m.adjoint())).norm();
    const double total = m.norm();
    if (anti > 1e-8 * total) {
      std::ostringstream os;
      os << "Hermitian: anti-Hermitian part " << anti << " exceeds 1e-8 * "
         << total;
      throw InvalidInput(os.str());
    }
    m_ = 0.5 * (m + m.adjoint());
  }

  // Symmetrizes without the anti-Hermitian check; for matrices that are
  // Hermitian analytically and only off by roundoff.
  static Hermitian symmetrized(const ComplexMatrix& m) {
    if (m.rows() != m.cols()) {
      throw DimensionMismatch("Hermitian: matrix is not square");
    }
    require_finite(m, "Hermitian");
    Hermitian h;
    h.m_ = 0.5 * (m + m.adjoint());
    return h;
  }

  static Hermitian zero(int n) {
    return Hermitian::symmetrized(ComplexMatrix::Zero(n, n));
  }
  static Hermitian identity(int n) {
    return Hermitian::symmetrized(ComplexMatrix::Identity(n, n));
  }
  static Hermitian diagonal(const RealVector& d) {
    return Hermitian::symmetrized(ComplexMatrix(d.cast<Complex>().asDiagonal()));
  }

  int dim() const { return static_cast<int>(m_.rows()); }
  const ComplexMatrix& matrix() const { return m_; }

  friend Hermitian operator+(const Hermitian& a, const Hermitian& b) {
    return Hermitian::symmetrized(a.m_ + b.m_);
  }
  friend Hermitian operator-(const Hermitian& a, const Hermitian& b) {
    return Hermitian::symmetrized(a.m_ - b.m_);
  }
  friend Hermitian operator*(double s, const Hermitian& a) {
    return Hermitian::symmetrized(s * a.m_);
  }

 private:
  ComplexMatrix m_;
};

// tr(A B) for Hermitian A, B; real up to roundoff.
inline double trace_pairing(const Hermitian& a, const Hermitian& b) {
  return (a.matrix().cwiseProduct(b.matrix().transpose())).sum().real();
}

// H = u diag(lambda) u^dagger with lambda sorted descending.
struct SpectralDecomposition {
  RealVector eigenvalues;
  ComplexMatrix eigenvectors;

  ComplexMatrix reconstruct() const {
    return eigenvectors * eigenvalues.cast<Complex>().asDiagonal() *
           eigenvectors.adjoint();
  }
};

// Descending eigen-decomposition. Each eigenvector is rotated so that its
// first nonzero component is real and positive, which makes the output a
// deterministic function of the input.
inline SpectralDecomposition herm_eig(const Hermitian& h) {
  const int n = h.dim();
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(h.matrix());
  if (solver.info() != Eigen::Success) {
    throw InvalidInput("herm_eig: eigen-decomposition failed");
  }
  SpectralDecomposition out;
  out.eigenvalues = solver.eigenvalues().reverse();
  out.eigenvectors = solver.eigenvectors().rowwise().reverse();
  for (int j = 0; j < n; ++j) {
    auto col = out.eigenvectors.col(j);
    for (int i = 0; i < n; ++i) {
      const double mag = std::abs(col(i));
      if (mag > 1e-12) {
        col *= std::conj(col(i)) / mag;
        break;
      }
    }
  }
  return out;
}

// A permutation-invariant norm on R^n from the l_p family, p in [1, inf].
class PermInvariantNorm {
 public:
  explicit PermInvariantNorm(double p = 1.0) : p_(p) {
    if (!(p >= 1.0)) {
      throw InvalidInput("PermInvariantNorm: p must lie in [1, inf]");
    }
  }

  static PermInvariantNorm l1() { return PermInvariantNorm(1.0); }
  static PermInvariantNorm l2() { return PermInvariantNorm(2.0); }
  static PermInvariantNorm linf() { return PermInvariantNorm(kInf); }
  static PermInvariantNorm lp(double p) { return PermInvariantNorm(p); }

  double p() const { return p_; }
  bool is_inf() const { return std::isinf(p_); }

  // Hoelder conjugate: 1/p + 1/q = 1.
  PermInvariantNorm dual() const {
    if (p_ == 1.0) return linf();
    if (is_inf()) return l1();
    return PermInvariantNorm(p_ / (p_ - 1.0));
  }

  double operator()(const RealVector& x) const {
    if (x.size() == 0) return 0.0;
    const double top = x.cwiseAbs().maxCoeff();
    if (top == 0.0) return 0.0;
    if (is_inf()) return top;
    if (p_ == 1.0) return x.cwiseAbs().sum();
    if (p_ == 2.0) return x.norm();
    double acc = 0.0;
    for (double xi : x) acc += std::pow(std::abs(xi) / top, p_);
    return top * std::pow(acc, 1.0 / p_);
  }

  // A vector y with dual()(y) = 1 (or y = 0 when x = 0) and <y, x> = v(x).
  RealVector norming_vector(const RealVector& x) const {
    RealVector y = RealVector::Zero(x.size());
    const double nx = (*this)(x);
    if (nx == 0.0) return y;
    auto sign = [](double t) { return t > 0 ? 1.0 : (t < 0 ? -1.0 : 0.0); };
    if (is_inf()) {
      Eigen::Index j = 0;
      x.cwiseAbs().maxCoeff(&j);
      y(j) = sign(x(j));
    } else if (p_ == 1.0) {
      for (Eigen::Index i = 0; i < x.size(); ++i) y(i) = sign(x(i));
    } else {
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        y(i) = sign(x(i)) * std::pow(std::abs(x(i)) / nx, p_ - 1.0);
      }
    }
    return y;
  }

  std::string name() const {
    if (is_inf()) return "linf";
    std::ostringstream os;
    os << "l" << p_;
    return os.str();
  }

 private:
  double p_;
};

inline double schatten_norm(const Hermitian& h, const PermInvariantNorm& v) {
  return v(herm_eig(h).eigenvalues);
}

// ||H||_v^* = ||H||_{v*}.
inline double dual_norm(const Hermitian& h, const PermInvariantNorm& v) {
  return v.dual()(herm_eig(h).eigenvalues);
}

inline RealVector diag_project(const Hermitian& h) {
  return h.matrix().diagonal().real();
}

// u f(diag lambda) u^dagger.
inline ComplexMatrix apply_spectral(const SpectralDecomposition& s,
                                    const std::function<double(double)>& fn) {
  RealVector mapped = s.eigenvalues.unaryExpr(fn);
  return s.eigenvectors * mapped.cast<Complex>().asDiagonal() *
         s.eigenvectors.adjoint();
}

namespace detail {

inline SpectralDecomposition positive_spectrum(const Hermitian& x,
                                               const char* what) {
  SpectralDecomposition s = herm_eig(x);
  const double lo = s.eigenvalues.size() ? s.eigenvalues.minCoeff() : 1.0;
  if (!(lo > 0.0)) {
    std::ostringstream os;
    os << what << ": matrix is not positive definite (smallest eigenvalue "
       << lo << ")";
    throw DomainError(os.str(), lo);
  }
  return s;
}

}  // namespace detail

inline ComplexMatrix mat_exp(const Hermitian& h) {
  return apply_spectral(herm_eig(h), [](double t) { return std::exp(t); });
}

inline Hermitian mat_log(const Hermitian& x) {
  return Hermitian::symmetrized(apply_spectral(detail::positive_spectrum(x, "mat_log"),
                                  [](double t) { return std::log(t); }));
}

inline ComplexMatrix mat_sqrt(const Hermitian& x) {
  return apply_spectral(detail::positive_spectrum(x, "mat_sqrt"),
                        [](double t) { return std::sqrt(t); });
}

inline ComplexMatrix mat_inv_sqrt(const Hermitian& x) {
  return apply_spectral(detail::positive_spectrum(x, "mat_inv_sqrt"),
                        [](double t) { return 1.0 / std::sqrt(t); });
}

// Singular values are counted toward the rank when they exceed
// max(rows, cols) * eps * sigma_max * 16.
inline double rank_threshold(Eigen::Index rows, Eigen::Index cols,
                             double sigma_max) {
  return static_cast<double>(std::max(rows, cols)) *
         std::numeric_limits<double>::epsilon() * sigma_max * 16.0;
}

// Number of singular values above the threshold. A positive `scale` sets the
// reference magnitude from outside, so a matrix of pure roundoff (e.g. A_k
// applied to a common kernel) counts as rank zero.
inline int count_rank(const RealVector& s, Eigen::Index rows, Eigen::Index cols,
                      double scale) {
  const double ref = std::max(s.size() ? s(0) : 0.0, scale);
  if (ref <= 0.0) return 0;
  const double tau = rank_threshold(rows, cols, ref);
  int r = 0;
  for (double si : s) r += si > tau ? 1 : 0;
  return r;
}

inline int numerical_rank(const ComplexMatrix& m, double scale = 0.0) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<ComplexMatrix> svd(m);
  return count_rank(svd.singularValues(), m.rows(), m.cols(), scale);
}

// Orthonormal basis of the column space of m (ordered by singular value).
inline ComplexMatrix range_basis(const ComplexMatrix& m, double scale = 0.0) {
  if (m.cols() == 0) return ComplexMatrix(m.rows(), 0);
  Eigen::JacobiSVD<ComplexMatrix> svd(m, Eigen::ComputeFullU);
  const int r = count_rank(svd.singularValues(), m.rows(), m.cols(), scale);
  return svd.matrixU().leftCols(r);
}

// Orthonormal basis of the orthogonal complement of span(columns of m).
inline ComplexMatrix complement_basis(const ComplexMatrix& m,
                                      double scale = 0.0) {
  const Eigen::Index n = m.rows();
  if (m.cols() == 0) return ComplexMatrix::Identity(n, n);
  Eigen::JacobiSVD<ComplexMatrix> svd(m, Eigen::ComputeFullU);
  const int r = count_rank(svd.singularValues(), m.rows(), m.cols(), scale);
  return svd.matrixU().rightCols(n - r);
}

// Largest principal angle (radians) between the column spans of two
// orthonormal bases of equal dimension.
inline double max_principal_angle(const ComplexMatrix& a,
                                  const ComplexMatrix& b) {
  if (a.cols() != b.cols()) {
    throw DimensionMismatch("max_principal_angle: dimensions differ");
  }
  if (a.cols() == 0) return 0.0;
  Eigen::JacobiSVD<ComplexMatrix> svd(a.adjoint() * b);
  const double smallest = std::min(1.0, svd.singularValues().minCoeff());
  return std::acos(smallest);
}

}  // namespace ncscale

#endif  // NCSCALE_LINALG_HPP_
