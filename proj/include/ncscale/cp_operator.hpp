#ifndef NCSCALE_CP_OPERATOR_HPP_
#define NCSCALE_CP_OPERATOR_HPP_

// Matrix tuples A = (A_1, ..., A_m) as completely positive operators
//
//   T_A(X)  = sum_k A_k X A_k^dagger,
//   T*_A(X) = sum_k A_k^dagger X A_k,
//
// the two-sided scaling action A -> g^dagger A h, and the capacity function
//
//   f(X) = log det T_A(X) - log det X,
//
// whose differential at X = h h^dagger is, after the left normalization
// g = T_A(X)^{-1/2}, the right residual T*_{g^dagger A h}(I) - I.

#include <cmath>
#include <sstream>
#include <utility>
#include <vector>

#include "ncscale/linalg.hpp"
#include "ncscale/pd_manifold.hpp"

namespace ncscale {

class MatrixTuple {
 public:
  MatrixTuple() = default;

  explicit MatrixTuple(std::vector<ComplexMatrix> mats)
      : mats_(std::move(mats)) {
    if (mats_.empty()) throw InvalidInput("MatrixTuple: need m >= 1");
    n_ = static_cast<int>(mats_.front().rows());
    for (const auto& a : mats_) {
      if (a.rows() != n_ || a.cols() != n_) {
        throw DimensionMismatch(
            "MatrixTuple: matrices must be square of equal size");
      }
      require_finite(a, "MatrixTuple");
    }
  }

  int n() const { return n_; }
  int m() const { return static_cast<int>(mats_.size()); }
  const ComplexMatrix& operator[](int k) const { return mats_[k]; }
  const std::vector<ComplexMatrix>& matrices() const { return mats_; }

  MatrixTuple adjoint() const {
    std::vector<ComplexMatrix> out;
    out.reserve(mats_.size());
    for (const auto& a : mats_) out.push_back(a.adjoint());
    return MatrixTuple(std::move(out));
  }

  // (A_1 A_2 ... A_m), n x nm.
  ComplexMatrix horizontal_stack() const {
    ComplexMatrix s(n_, static_cast<Eigen::Index>(n_) * m());
    for (int k = 0; k < m(); ++k) s.middleCols(k * n_, n_) = mats_[k];
    return s;
  }

  // (A_1; A_2; ...; A_m), nm x n.
  ComplexMatrix vertical_stack() const {
    ComplexMatrix s(static_cast<Eigen::Index>(n_) * m(), n_);
    for (int k = 0; k < m(); ++k) s.middleRows(k * n_, n_) = mats_[k];
    return s;
  }

 private:
  int n_ = 0;
  std::vector<ComplexMatrix> mats_;
};

// (g, h) acting as A -> g^dagger A h.
class ScalingPair {
 public:
  ScalingPair(ComplexMatrix g, ComplexMatrix h)
      : g_(std::move(g)), h_(std::move(h)) {
    if (g_.rows() != g_.cols() || h_.rows() != h_.cols() ||
        g_.rows() != h_.rows()) {
      throw DimensionMismatch("ScalingPair: g and h must be n x n");
    }
    require_invertible(g_, "g");
    require_invertible(h_, "h");
  }

  static ScalingPair identity(int n) {
    return {ComplexMatrix::Identity(n, n), ComplexMatrix::Identity(n, n)};
  }

  int n() const { return static_cast<int>(g_.rows()); }
  const ComplexMatrix& g() const { return g_; }
  const ComplexMatrix& h() const { return h_; }

 private:
  static void require_invertible(const ComplexMatrix& a, const char* name) {
    require_finite(a, "ScalingPair");
    Eigen::JacobiSVD<ComplexMatrix> svd(a);
    const RealVector& s = svd.singularValues();
    if (!(s(s.size() - 1) > 1e-12 * s(0))) {
      std::ostringstream os;
      os << "ScalingPair: " << name << " is numerically singular (sigma_min = "
         << s(s.size() - 1) << ", sigma_max = " << s(0) << ")";
      throw InvalidScaling(os.str());
    }
  }

  ComplexMatrix g_;
  ComplexMatrix h_;
};

struct ResidualReport {
  double left = 0.0;
  double right = 0.0;
  PermInvariantNorm norm;
  double sum = 0.0;
};

inline void require_dim(const MatrixTuple& a, Eigen::Index n,
                        const char* what) {
  if (a.n() != n) throw DimensionMismatch(std::string(what) + ": size mismatch");
}

inline Hermitian apply_T(const MatrixTuple& a, const Hermitian& x) {
  require_dim(a, x.dim(), "apply_T");
  ComplexMatrix acc = ComplexMatrix::Zero(a.n(), a.n());
  for (const auto& ak : a.matrices()) acc += ak * x.matrix() * ak.adjoint();
  return Hermitian::symmetrized(acc);
}

inline Hermitian apply_Tstar(const MatrixTuple& a, const Hermitian& x) {
  require_dim(a, x.dim(), "apply_Tstar");
  ComplexMatrix acc = ComplexMatrix::Zero(a.n(), a.n());
  for (const auto& ak : a.matrices()) acc += ak.adjoint() * x.matrix() * ak;
  return Hermitian::symmetrized(acc);
}

inline MatrixTuple scale_tuple(const MatrixTuple& a, const ScalingPair& s) {
  require_dim(a, s.n(), "scale_tuple");
  std::vector<ComplexMatrix> out;
  out.reserve(a.m());
  for (const auto& ak : a.matrices()) out.push_back(s.g().adjoint() * ak * s.h());
  return MatrixTuple(std::move(out));
}

// Marginal residuals of a tuple that is already scaled.
inline ResidualReport marginal_residual(const MatrixTuple& b,
                                        const PermInvariantNorm& v) {
  const Hermitian id = Hermitian::identity(b.n());
  ResidualReport r;
  r.norm = v;
  r.left = schatten_norm(apply_T(b, id) - id, v);
  r.right = schatten_norm(apply_Tstar(b, id) - id, v);
  r.sum = r.left + r.right;
  return r;
}

inline ResidualReport residual(const MatrixTuple& a, const ScalingPair& s,
                               const PermInvariantNorm& v) {
  return marginal_residual(scale_tuple(a, s), v);
}

struct SupportRanks {
  int left_rank = 0;   // rank (A_1 ... A_m)
  int right_rank = 0;  // rank (A_1^dagger ... A_m^dagger)
};

inline SupportRanks check_full_support(const MatrixTuple& a) {
  return {numerical_rank(a.horizontal_stack()),
          numerical_rank(a.vertical_stack())};
}

inline void require_left_support(const MatrixTuple& a, const char* what) {
  const SupportRanks r = check_full_support(a);
  if (r.left_rank < a.n()) {
    std::ostringstream os;
    os << what << ": tuple does not have full support (left rank "
       << r.left_rank << " < " << a.n() << "); apply reduce_tuple first";
    throw NotFullSupport(os.str(), r.left_rank, r.right_rank);
  }
}

// Everything the capacity needs at X = h h^dagger, computed from the thin SVD
// S = (A_1 h ... A_m h) = U Sigma W^dagger. Then T_A(X) = U Sigma^2 U^dagger,
// g = T_A(X)^{-1/2} = U Sigma^{-1} U^dagger and the left-normalized tuple is
// g A_k h = U W_k^dagger, which avoids forming T_A(X)^{-1}.
struct FactorEvaluation {
  double log_det_T = 0.0;
  double log_det_X = 0.0;
  double cond_T = 1.0;
  ComplexMatrix g;
  MatrixTuple scaled;
  Hermitian right_marginal;  // T*_{g^dagger A h}(I)

  double f() const { return log_det_T - log_det_X; }
  // h^dagger df(X) h.
  Hermitian pulled_back_gradient() const {
    return right_marginal - Hermitian::identity(right_marginal.dim());
  }
};

inline FactorEvaluation evaluate_factor(const MatrixTuple& a,
                                        const ComplexMatrix& h) {
  require_dim(a, h.rows(), "evaluate_factor");
  const int n = a.n();
  const int m = a.m();
  ComplexMatrix s(n, static_cast<Eigen::Index>(n) * m);
  for (int k = 0; k < m; ++k) s.middleCols(k * n, n) = a[k] * h;
  Eigen::JacobiSVD<ComplexMatrix> svd(s, Eigen::ComputeThinU |
                                             Eigen::ComputeThinV);
  const RealVector& sv = svd.singularValues();
  const double tau = rank_threshold(s.rows(), s.cols(), sv(0));
  if (!(sv(n - 1) > tau)) {
    throw NotFullSupport(
        "evaluate_factor: T_A(X) is singular; the tuple lacks full support",
        numerical_rank(a.horizontal_stack()), -1);
  }
  Eigen::JacobiSVD<ComplexMatrix> hsvd(h);
  const RealVector& hs = hsvd.singularValues();
  if (!(hs(n - 1) > 0.0)) {
    throw DomainError("evaluate_factor: h is singular", 0.0);
  }

  FactorEvaluation out;
  out.log_det_T = 2.0 * sv.array().log().sum();
  out.log_det_X = 2.0 * hs.array().log().sum();
  out.cond_T = (sv(0) / sv(n - 1)) * (sv(0) / sv(n - 1));
  const ComplexMatrix& u = svd.matrixU();
  const ComplexMatrix& w = svd.matrixV();
  out.g = u * sv.cwiseInverse().cast<Complex>().asDiagonal() * u.adjoint();
  std::vector<ComplexMatrix> blocks;
  blocks.reserve(m);
  ComplexMatrix rm = ComplexMatrix::Zero(n, n);
  for (int k = 0; k < m; ++k) {
    const auto wk = w.middleRows(k * n, n);
    blocks.push_back(u * wk.adjoint());
    rm += wk * wk.adjoint();
  }
  out.scaled = MatrixTuple(std::move(blocks));
  out.right_marginal = Hermitian::symmetrized(rm);
  return out;
}

inline double capacity_f(const MatrixTuple& a, const PDPoint& x) {
  require_dim(a, x.dim(), "capacity_f");
  require_left_support(a, "capacity_f");
  return evaluate_factor(a, x.sqrt()).f();
}

// Condition number of T_A(X) above which the differential is refused.
inline constexpr double kMaxGradientCondition = 1e14;

// df(X) = sum_k A_k^dagger T_A(X)^{-1} A_k - X^{-1}.
inline CotangentVector grad_f(const MatrixTuple& a, const PDPoint& x) {
  require_dim(a, x.dim(), "grad_f");
  require_left_support(a, "grad_f");
  const FactorEvaluation e = evaluate_factor(a, x.sqrt());
  if (e.cond_T > kMaxGradientCondition) {
    std::ostringstream os;
    os << "grad_f: condition number of T_A(X) is " << e.cond_T
       << " (> 1e14); iterate is too close to the boundary of P_n";
    throw DomainError(os.str(), x.spectrum().eigenvalues.minCoeff(),
                      1.0 / e.cond_T);
  }
  const ComplexMatrix ri = x.inv_sqrt();
  return {x, Hermitian::symmetrized(ri * e.pulled_back_gradient().matrix() * ri)};
}

struct PointScaling {
  ScalingPair pair;
  ResidualReport report;  // trace-norm residuals of g^dagger A h
  MatrixTuple scaled;
};

// The scaling (g, h) attached to X = h h^dagger with g = T_A(X)^{-1/2}; the
// scaled tuple is left-normalized and its right residual equals
// ||h^dagger df(X) h||_1.
inline PointScaling scaling_from_factor(const MatrixTuple& a,
                                        const ComplexMatrix& h) {
  FactorEvaluation e = evaluate_factor(a, h);
  ResidualReport r = marginal_residual(e.scaled, PermInvariantNorm::l1());
  return {ScalingPair(e.g, h), r, std::move(e.scaled)};
}

inline PointScaling scaling_from_point(const MatrixTuple& a,
                                       const PDPoint& x) {
  require_dim(a, x.dim(), "scaling_from_point");
  require_left_support(a, "scaling_from_point");
  return scaling_from_factor(a, x.sqrt());
}

// Point X = exp(L) given through its logarithm, so that rays exp(tH) far out
// toward the boundary can be evaluated without forming X.
inline PointScaling scaling_from_log_point(const MatrixTuple& a,
                                           const Hermitian& log_x) {
  require_dim(a, log_x.dim(), "scaling_from_log_point");
  require_left_support(a, "scaling_from_log_point");
  return scaling_from_factor(a, mat_exp(0.5 * log_x));
}

}  // namespace ncscale

#endif  // NCSCALE_CP_OPERATOR_HPP_
