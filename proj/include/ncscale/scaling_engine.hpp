#ifndef NCSCALE_SCALING_ENGINE_HPP_
#define NCSCALE_SCALING_ENGINE_HPP_

// Iterative drivers that decrease the capacity f and track scaling residuals:
//
//  * operator Sinkhorn (alternating left/right normalization),
//  * Riemannian gradient descent for the d_2 metric
//      X <- gamma_{X,-G}(eta),  G = X df(X) X,
//  * a minimizing-movement scheme
//      X_{k+1} ~ argmin_Y f(Y) + d_{l_p}(X_k, Y)^2 / (2 tau)
//    with the l_p tangent norm standing in for the non-smooth l_inf one.
//
// Iterates are kept in factored form X = h h^dagger. A d_2 gradient step then
// reads h <- h exp(-eta R / 2) with R = h^dagger df(X) h the right residual of
// the left-normalized tuple, and no step ever forms X^{-1}.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ncscale/cp_operator.hpp"
#include "ncscale/linalg.hpp"
#include "ncscale/pd_manifold.hpp"

namespace ncscale {

struct FlowConfig {
  int max_iters = 1000;
  double step_size = 0.1;
  double tolerance = 1e-6;
  PermInvariantNorm norm = PermInvariantNorm::l1();  // residual reporting
  double smoothing_p = 8.0;
  double mm_tau = 1.0;
  std::uint64_t seed = 0;

  // Norm of the flow metric used for d_v(I, X) and the direction H(t).
  PermInvariantNorm metric = PermInvariantNorm::linf();
  double round_tol = 1e-3;  // eigen-gap threshold relative to ||H||_inf
  int blowup_trials = 20;
  int max_blowup_dim = 0;  // largest blow-up size d; 0 means n - 1
  int stagnation_window = 50;
  double stagnation_tol = 1e-12;
  double armijo = 1e-4;
  int max_halvings = 30;
  double inner_tolerance = 1e-6;
  int inner_max_iters = 200;
  int direction_window = 10;

  void validate() const {
    if (max_iters < 1) throw InvalidInput("FlowConfig: max_iters must be >= 1");
    if (!(tolerance >= 0.0)) {
      throw InvalidInput("FlowConfig: tolerance must be >= 0");
    }
    if (!(step_size > 0.0)) {
      throw InvalidInput("FlowConfig: step_size must be > 0");
    }
    if (!(mm_tau > 0.0)) throw InvalidInput("FlowConfig: mm_tau must be > 0");
    if (max_blowup_dim < 0) {
      throw InvalidInput("FlowConfig: max_blowup_dim must be >= 0");
    }
    if (!(smoothing_p >= 2.0)) {
      throw InvalidInput("FlowConfig: smoothing_p must be >= 2 (or inf)");
    }
  }
};

enum class StopReason {
  kConverged,   // residual tolerance reached
  kMaxIters,
  kStagnation,  // relative decrease of f below threshold over a window
  kBoundary,    // iterate approached the boundary of P_n
  kStall,       // Sinkhorn hit a singular marginal
  kLineSearch,  // no decrease found by backtracking
};

inline const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::kConverged: return "converged";
    case StopReason::kMaxIters: return "max_iters";
    case StopReason::kStagnation: return "stagnation";
    case StopReason::kBoundary: return "boundary";
    case StopReason::kStall: return "stall";
    case StopReason::kLineSearch: return "line_search";
  }
  return "unknown";
}

struct FlowRecord {
  int step = 0;
  ScalingPair scaling = ScalingPair::identity(1);  // X = h h^dagger
  double f_value = 0.0;
  double residual_l1 = 0.0;    // left + right, trace norm
  double residual_l2 = 0.0;    // left + right, Frobenius norm
  double residual_norm = 0.0;  // left + right in FlowConfig::norm
  double slope = 0.0;          // ||df(X)||*_{inf,X} = ||h^dagger df h||_1
  double slope_d2 = 0.0;       // ||df(X)||*_{2,X}
  double dist = 0.0;           // d_metric(X_0, X)
  std::optional<Hermitian> direction;  // log X / d_metric(I, X)
  bool downgraded = false;     // minimizing movement fell back to a GD step
  int inner_iters = 0;

  Hermitian point() const {
    return Hermitian::symmetrized(scaling.h() * scaling.h().adjoint());
  }
};

struct FlowTrace {
  std::vector<FlowRecord> records;
  StopReason stop = StopReason::kMaxIters;
  std::string message;
  std::optional<ComplexMatrix> defect;  // Sinkhorn stall subspace

  const FlowRecord& best_by_residual() const {
    std::size_t best = 0;
    for (std::size_t i = 1; i < records.size(); ++i) {
      if (records[i].residual_l1 < records[best].residual_l1) best = i;
    }
    return records.at(best);
  }
  double min_slope() const {
    double s = std::numeric_limits<double>::infinity();
    for (const auto& r : records) s = std::min(s, r.slope);
    return s;
  }
};

namespace detail {

// log X for X = h h^dagger, from the SVD h = U Sigma V^dagger.
inline Hermitian log_of_factor(const ComplexMatrix& h) {
  Eigen::JacobiSVD<ComplexMatrix> svd(h, Eigen::ComputeFullU);
  const RealVector logs = 2.0 * svd.singularValues().array().log().matrix();
  return Hermitian::symmetrized(svd.matrixU() * logs.cast<Complex>().asDiagonal() *
                   svd.matrixU().adjoint());
}

// lambda_min / lambda_max of h h^dagger.
inline double factor_ratio(const ComplexMatrix& h) {
  Eigen::JacobiSVD<ComplexMatrix> svd(h);
  const RealVector& s = svd.singularValues();
  const double r = s(s.size() - 1) / s(0);
  return r * r;
}

// d_v(X_0, X) with X_0 = h0 h0^dagger, X = h h^dagger.
inline double factor_distance(const ComplexMatrix& h0, const ComplexMatrix& h,
                              const PermInvariantNorm& v) {
  Eigen::JacobiSVD<ComplexMatrix> svd(h0.partialPivLu().solve(h));
  return v(2.0 * svd.singularValues().array().log().matrix());
}

// Fills every record field that depends only on (a, pair) and the scaled
// tuple b = g^dagger A h.
inline FlowRecord make_record(int step, const ScalingPair& pair, const MatrixTuple& b,
                              const FactorEvaluation& e,
                              const ComplexMatrix& h0, const FlowConfig& cfg) {
  FlowRecord rec;
  rec.step = step;
  rec.scaling = pair;
  rec.f_value = e.f();
  const ResidualReport r1 = marginal_residual(b, PermInvariantNorm::l1());
  const ResidualReport r2 = marginal_residual(b, PermInvariantNorm::l2());
  const ResidualReport rv = marginal_residual(b, cfg.norm);
  rec.residual_l1 = r1.sum;
  rec.residual_l2 = r2.sum;
  rec.residual_norm = rv.sum;
  const Hermitian grad = e.pulled_back_gradient();
  const RealVector ev = herm_eig(grad).eigenvalues;
  rec.slope = ev.cwiseAbs().sum();
  rec.slope_d2 = ev.norm();
  rec.dist = factor_distance(h0, pair.h(), cfg.metric);
  const Hermitian lx = log_of_factor(pair.h());
  const double d0 = schatten_norm(lx, cfg.metric);
  if (d0 > 1e-6) rec.direction = (1.0 / d0) * lx;
  return rec;
}

inline bool stagnated(const FlowTrace& t, const FlowConfig& cfg) {
  const int w = cfg.stagnation_window;
  const int k = static_cast<int>(t.records.size()) - 1;
  if (w <= 0 || k < w) return false;
  const double now = t.records[k].f_value;
  const double before = t.records[k - w].f_value;
  return (before - now) < cfg.stagnation_tol * std::max(1.0, std::abs(now));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Operator Sinkhorn.

namespace detail {

struct SinkhornState {
  ScalingPair pair;
  MatrixTuple scaled;
};

// Inverse square root of a marginal, or a stall carrying its kernel.
inline ComplexMatrix marginal_inv_sqrt(const Hermitian& marginal,
                                       const ComplexMatrix& frame,
                                       bool left_side) {
  const SpectralDecomposition s = herm_eig(marginal);
  const int n = marginal.dim();
  const double hi = s.eigenvalues(0);
  const double tau = rank_threshold(n, n, std::max(hi, 0.0));
  int rank = 0;
  for (int i = 0; i < n; ++i) rank += s.eigenvalues(i) > tau ? 1 : 0;
  if (rank < n || !(hi > 0.0)) {
    // Kernel of the scaled marginal, mapped back through the scaling frame.
    ComplexMatrix kernel = frame * s.eigenvectors.rightCols(n - rank);
    kernel = range_basis(kernel);
    std::ostringstream os;
    os << "sinkhorn: " << (left_side ? "left" : "right")
       << " marginal is singular (rank " << rank << " < " << n << ")";
    throw StallError(os.str(), kernel, left_side);
  }
  return apply_spectral(s, [](double t) { return 1.0 / std::sqrt(t); });
}

inline SinkhornState sinkhorn_update(const SinkhornState& st) {
  const int n = st.pair.n();
  const Hermitian id = Hermitian::identity(n);
  // Stall subspaces are reported in the original coordinates: a kernel
  // vector w of g^dagger T_A(h h^dagger) g corresponds to g w, and likewise
  // h w on the right.
  const ComplexMatrix li =
      marginal_inv_sqrt(apply_T(st.scaled, id), st.pair.g(), true);
  std::vector<ComplexMatrix> mid;
  mid.reserve(st.scaled.m());
  for (const auto& b : st.scaled.matrices()) mid.push_back(li * b);
  const MatrixTuple half(std::move(mid));
  const ComplexMatrix ri =
      marginal_inv_sqrt(apply_Tstar(half, id), st.pair.h(), false);
  std::vector<ComplexMatrix> out;
  out.reserve(half.m());
  for (const auto& b : half.matrices()) out.push_back(b * ri);
  return {ScalingPair(st.pair.g() * li, st.pair.h() * ri),
          MatrixTuple(std::move(out))};
}

}  // namespace detail

// One full Sinkhorn step: g <- g T_{g^dagger A h}(I)^{-1/2}, then
// h <- h T*_{g^dagger A h}(I)^{-1/2}.
inline ScalingPair sinkhorn_step(const MatrixTuple& a, const ScalingPair& s) {
  require_dim(a, s.n(), "sinkhorn_step");
  return detail::sinkhorn_update({s, scale_tuple(a, s)}).pair;
}

inline FlowTrace run_sinkhorn(const MatrixTuple& a, const FlowConfig& cfg) {
  cfg.validate();
  const int n = a.n();
  const SupportRanks ranks = check_full_support(a);
  if (ranks.left_rank < n || ranks.right_rank < n) {
    std::ostringstream os;
    os << "run_sinkhorn: tuple lacks full support (left rank "
       << ranks.left_rank << ", right rank " << ranks.right_rank
       << ", n = " << n << "); apply reduce_tuple first";
    throw NotFullSupport(os.str(), ranks.left_rank, ranks.right_rank);
  }
  FlowTrace trace;
  const ComplexMatrix h0 = ComplexMatrix::Identity(n, n);
  detail::SinkhornState st{ScalingPair::identity(n), a};
  auto record = [&](int step) {
    const FactorEvaluation e = evaluate_factor(a, st.pair.h());
    trace.records.push_back(
        detail::make_record(step, st.pair, st.scaled, e, h0, cfg));
  };
  record(0);
  for (int it = 1;; ++it) {
    if (trace.records.back().residual_norm <= cfg.tolerance) {
      trace.stop = StopReason::kConverged;
      break;
    }
    if (it > cfg.max_iters) {
      trace.stop = StopReason::kMaxIters;
      break;
    }
    try {
      st = detail::sinkhorn_update(st);
      record(it);
    } catch (const StallError& e) {
      trace.stop = StopReason::kStall;
      trace.message = e.what();
      trace.defect = e.defect_basis();
      break;
    } catch (const InvalidScaling& e) {
      trace.stop = StopReason::kBoundary;
      trace.message = e.what();
      break;
    } catch (const NotFullSupport& e) {
      trace.stop = StopReason::kBoundary;
      trace.message = e.what();
      break;
    }
  }
  return trace;
}

// ---------------------------------------------------------------------------
// d_2 gradient descent.

namespace detail {

struct FactorState {
  ComplexMatrix h;
  FactorEvaluation eval;
};

inline FlowRecord record_factor(int step, const MatrixTuple& a,
                                const FactorState& st, const ComplexMatrix& h0,
                                const FlowConfig& cfg) {
  return make_record(step, ScalingPair(st.eval.g, st.h), st.eval.scaled,
                     st.eval, h0, cfg);
}

// Relative position of an iterate inside P_n; nullopt when acceptable.
inline std::optional<std::string> boundary_issue(const ComplexMatrix& h,
                                                 const FactorEvaluation& e) {
  const double ratio = factor_ratio(h);
  if (!(ratio > kPdTolerance)) {
    std::ostringstream os;
    os << "iterate left the PD tolerance (lambda_min/lambda_max = " << ratio
       << ")";
    return os.str();
  }
  if (!(e.cond_T <= kMaxGradientCondition)) {
    std::ostringstream os;
    os << "T_A(X) condition number " << e.cond_T << " exceeds 1e14";
    return os.str();
  }
  return std::nullopt;
}

// Backtracking d_2 gradient step from st; nullopt if no decrease was found.
inline std::optional<FactorState> gradient_step(const MatrixTuple& a,
                                                const FactorState& st,
                                                const FlowConfig& cfg) {
  const Hermitian r = st.eval.pulled_back_gradient();
  const double g2 = r.matrix().squaredNorm();
  double eta = cfg.step_size;
  for (int i = 0; i <= cfg.max_halvings; ++i, eta *= 0.5) {
    const ComplexMatrix hn = st.h * mat_exp(-0.5 * eta * r);
    try {
      FactorEvaluation en = evaluate_factor(a, hn);
      if (en.f() <= st.eval.f() - cfg.armijo * eta * g2) {
        return FactorState{hn, std::move(en)};
      }
    } catch (const NotFullSupport&) {
    } catch (const DomainError&) {
    }
  }
  return std::nullopt;
}

}  // namespace detail

inline FlowTrace run_gradient_descent(const MatrixTuple& a, const PDPoint& x0,
                                      const FlowConfig& cfg) {
  cfg.validate();
  require_dim(a, x0.dim(), "run_gradient_descent");
  require_left_support(a, "run_gradient_descent");
  FlowTrace trace;
  const ComplexMatrix h0 = x0.sqrt();
  detail::FactorState st{h0, evaluate_factor(a, h0)};
  trace.records.push_back(detail::record_factor(0, a, st, h0, cfg));
  for (int it = 1;; ++it) {
    if (trace.records.back().residual_norm <= cfg.tolerance) {
      trace.stop = StopReason::kConverged;
      break;
    }
    if (it > cfg.max_iters) {
      trace.stop = StopReason::kMaxIters;
      break;
    }
    auto next = detail::gradient_step(a, st, cfg);
    if (!next) {
      trace.stop = StopReason::kLineSearch;
      trace.message = "backtracking found no decrease";
      break;
    }
    if (auto issue = detail::boundary_issue(next->h, next->eval)) {
      trace.stop = StopReason::kBoundary;
      trace.message = *issue;
      break;
    }
    st = std::move(*next);
    trace.records.push_back(detail::record_factor(it, a, st, h0, cfg));
    if (detail::stagnated(trace, cfg)) {
      trace.stop = StopReason::kStagnation;
      break;
    }
  }
  return trace;
}

// ---------------------------------------------------------------------------
// Minimizing movement.

namespace detail {

// phi(Z) = f(h e^Z h^dagger) + ||Z||_p^2 / (2 tau) in the normal chart at
// X_k = h h^dagger, where d_{l_p}(X_k, h e^Z h^dagger) = ||Z||_p.
struct ProximalObjective {
  const MatrixTuple& a;
  const ComplexMatrix& h;
  double log_det_base;
  PermInvariantNorm penalty_norm;
  double tau;

  struct Value {
    double phi = 0.0;
    Hermitian grad;
    ComplexMatrix half_exp;  // e^{Z/2}
    std::optional<FactorEvaluation> eval;
  };

  Value operator()(const Hermitian& z) const {
    const SpectralDecomposition s = herm_eig(z);
    const RealVector& mu = s.eigenvalues;
    const ComplexMatrix& u = s.eigenvectors;
    const int n = z.dim();
    Value out;
    out.half_exp =
        apply_spectral(s, [](double t) { return std::exp(0.5 * t); });
    const ComplexMatrix inv_half =
        apply_spectral(s, [](double t) { return std::exp(-0.5 * t); });
    FactorEvaluation e = evaluate_factor(a, h * out.half_exp);
    const double f_y = e.log_det_T - (log_det_base + mu.sum());
    const ComplexMatrix f_pull =
        inv_half * e.pulled_back_gradient().matrix() * inv_half;
    // Daleckii-Krein: D exp_Z[E] = u (Gamma o u^dagger E u) u^dagger.
    ComplexMatrix ft = u.adjoint() * f_pull * u;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const double d = mu(i) - mu(j);
        const double gamma =
            std::abs(d) < 1e-12
                ? std::exp(0.5 * (mu(i) + mu(j)))
                : std::exp(mu(j)) * std::expm1(d) / d;
        ft(i, j) *= gamma;
      }
    }
    const double nz = penalty_norm(mu);
    const RealVector y = penalty_norm.norming_vector(mu);
    const ComplexMatrix pen =
        (nz / tau) * (u * y.cast<Complex>().asDiagonal() * u.adjoint());
    out.grad = Hermitian::symmetrized(u * ft * u.adjoint() + pen);
    out.phi = f_y + nz * nz / (2.0 * tau);
    out.eval = std::move(e);
    return out;
  }
};

struct InnerResult {
  Hermitian z;
  ProximalObjective::Value value;
  int iters = 0;
  bool converged = false;
};

inline InnerResult minimize_proximal(const ProximalObjective& phi,
                                     const Hermitian& z0,
                                     const FlowConfig& cfg) {
  InnerResult res{z0, phi(z0), 0, false};
  double alpha = phi.tau / std::max(1.0, cfg.smoothing_p - 1.0);
  if (std::isinf(cfg.smoothing_p)) alpha = phi.tau * 1e-2;
  for (; res.iters < cfg.inner_max_iters; ++res.iters) {
    const double gnorm2 = res.value.grad.matrix().squaredNorm();
    if (std::sqrt(gnorm2) <= cfg.inner_tolerance) {
      res.converged = true;
      return res;
    }
    bool accepted = false;
    double a = alpha;
    for (int i = 0; i <= 40; ++i, a *= 0.5) {
      const Hermitian zn = res.z - a * res.value.grad;
      try {
        auto vn = phi(zn);
        if (vn.phi <= res.value.phi - cfg.armijo * a * gnorm2) {
          // Barzilai-Borwein guess for the next trial step.
          const ComplexMatrix ds = zn.matrix() - res.z.matrix();
          const ComplexMatrix dg =
              vn.grad.matrix() - res.value.grad.matrix();
          const double sy = (ds.adjoint() * dg).trace().real();
          alpha = sy > 0.0 ? ds.squaredNorm() / sy : 2.0 * a;
          alpha = std::clamp(alpha, 1e-12, 1e6);
          res.z = zn;
          res.value = std::move(vn);
          accepted = true;
          break;
        }
      } catch (const NotFullSupport&) {
      } catch (const DomainError&) {
      }
    }
    if (!accepted) break;
  }
  res.converged =
      res.value.grad.matrix().norm() <= cfg.inner_tolerance;
  return res;
}

}  // namespace detail

inline FlowTrace run_minimizing_movement(const MatrixTuple& a,
                                         const PDPoint& x0,
                                         const FlowConfig& cfg) {
  cfg.validate();
  require_dim(a, x0.dim(), "run_minimizing_movement");
  require_left_support(a, "run_minimizing_movement");
  const int n = a.n();
  FlowTrace trace;
  const ComplexMatrix h0 = x0.sqrt();
  detail::FactorState st{h0, evaluate_factor(a, h0)};
  trace.records.push_back(detail::record_factor(0, a, st, h0, cfg));
  const PermInvariantNorm pen = std::isinf(cfg.smoothing_p)
                                    ? PermInvariantNorm::linf()
                                    : PermInvariantNorm::lp(cfg.smoothing_p);
  Hermitian z_prev = Hermitian::zero(n);
  for (int it = 1;; ++it) {
    if (trace.records.back().residual_norm <= cfg.tolerance) {
      trace.stop = StopReason::kConverged;
      break;
    }
    if (it > cfg.max_iters) {
      trace.stop = StopReason::kMaxIters;
      break;
    }
    const detail::ProximalObjective phi{a, st.h, st.eval.log_det_X, pen,
                                        cfg.mm_tau};
    // Warm start from the previous displacement when it already improves on
    // staying put.
    Hermitian z0 = Hermitian::zero(n);
    if (schatten_norm(z_prev, PermInvariantNorm::linf()) > 0.0) {
      try {
        if (phi(z_prev).phi < st.eval.f()) z0 = z_prev;
      } catch (const Error&) {
      }
    }
    detail::InnerResult inner = detail::minimize_proximal(phi, z0, cfg);
    std::optional<detail::FactorState> next;
    bool downgraded = false;
    if (inner.converged && inner.value.phi <= st.eval.f()) {
      next = detail::FactorState{st.h * inner.value.half_exp,
                                 std::move(*inner.value.eval)};
      z_prev = inner.z;
    } else {
      downgraded = true;
      next = detail::gradient_step(a, st, cfg);
      z_prev = Hermitian::zero(n);
    }
    if (!next) {
      trace.stop = StopReason::kLineSearch;
      trace.message = "no decrease from proximal or gradient step";
      break;
    }
    if (auto issue = detail::boundary_issue(next->h, next->eval)) {
      trace.stop = StopReason::kBoundary;
      trace.message = *issue;
      break;
    }
    st = std::move(*next);
    FlowRecord rec = detail::record_factor(it, a, st, h0, cfg);
    rec.downgraded = downgraded;
    rec.inner_iters = inner.iters;
    trace.records.push_back(std::move(rec));
    if (detail::stagnated(trace, cfg)) {
      trace.stop = StopReason::kStagnation;
      break;
    }
  }
  return trace;
}

// Mean of the recorded directions H(t) over the last `window` records that
// carry one.
inline std::optional<Hermitian> tail_direction(const FlowTrace& trace,
                                               int window) {
  std::optional<ComplexMatrix> acc;
  int count = 0;
  for (auto it = trace.records.rbegin();
       it != trace.records.rend() && count < window; ++it) {
    if (!it->direction) continue;
    if (!acc) {
      acc = it->direction->matrix();
    } else {
      *acc += it->direction->matrix();
    }
    ++count;
  }
  if (!acc) return std::nullopt;
  return Hermitian::symmetrized(*acc / static_cast<double>(count));
}

}  // namespace ncscale

#endif  // NCSCALE_SCALING_ENGINE_HPP_
