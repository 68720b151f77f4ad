#ifndef NCSCALE_NCRANK_HPP_
#define NCSCALE_NCRANK_HPP_

// Noncommutative rank certification.
//
//   nc-rank(A) = n + min_U (dim AU - dim U)
//
// Upper bounds come from explicit subspaces U (witnessing dim U - dim AU),
// lower bounds from blow-ups: rank(sum_k A_k (x) R_k) <= d * nc-rank(A) for
// d x d matrices R_k. A certificate is issued when both bounds coincide.
//
// Candidate subspaces are drawn from coordinate subspaces, singular-vector
// flags of the stacked tuple, and flags of the limiting direction
// log X(t) / d(I, X(t)) of the capacity gradient flow, whose recession
// function
//
//   f^inf(H) = sum_i (lambda_i - lambda_{i+1}) (dim A U_i - dim U_i)
//
// is the Lovasz extension of U -> dim AU - dim U over the eigen-flag of H.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <sstream>
#include <utility>
#include <vector>

#include "ncscale/cp_operator.hpp"
#include "ncscale/linalg.hpp"
#include "ncscale/random.hpp"
#include "ncscale/scaling_engine.hpp"

namespace ncscale {

// A subspace of C^n held through an orthonormal basis (n x k).
class Subspace {
 public:
  Subspace() = default;

  Subspace(int ambient, ComplexMatrix basis)
      : ambient_(ambient), basis_(std::move(basis)) {
    if (basis_.rows() != ambient_) {
      throw DimensionMismatch("Subspace: basis has wrong number of rows");
    }
    const auto k = basis_.cols();
    if (k > 0 && (basis_.adjoint() * basis_ -
                  ComplexMatrix::Identity(k, k)).cwiseAbs().maxCoeff() > 1e-10) {
      throw InvalidInput("Subspace: basis is not orthonormal");
    }
  }

  // Orthonormalized span of arbitrary columns.
  static Subspace span(const ComplexMatrix& columns, double scale = 0.0) {
    return {static_cast<int>(columns.rows()), range_basis(columns, scale)};
  }
  static Subspace zero(int n) { return {n, ComplexMatrix(n, 0)}; }
  static Subspace whole(int n) {
    return {n, ComplexMatrix::Identity(n, n)};
  }
  static Subspace coordinate(int n, const std::vector<int>& indices) {
    ComplexMatrix b = ComplexMatrix::Zero(n, static_cast<Eigen::Index>(indices.size()));
    for (std::size_t j = 0; j < indices.size(); ++j) b(indices[j], j) = 1.0;
    return {n, b};
  }

  int ambient() const { return ambient_; }
  int dim() const { return static_cast<int>(basis_.cols()); }
  const ComplexMatrix& basis() const { return basis_; }

  Subspace orthogonal_complement() const {
    return {ambient_, complement_basis(basis_)};
  }

 private:
  int ambient_ = 0;
  ComplexMatrix basis_;
};

// Reference magnitude for ranks of A_k U: singular values of (A_1 B ... A_m B)
// with orthonormal B are bounded by it.
inline double tuple_scale(const MatrixTuple& a) {
  return a.horizontal_stack().norm();
}

// Sum of the images A_k U.
inline Subspace image(const MatrixTuple& a, const Subspace& u) {
  require_dim(a, u.ambient(), "image");
  const int k = u.dim();
  ComplexMatrix s(a.n(), static_cast<Eigen::Index>(k) * a.m());
  for (int i = 0; i < a.m(); ++i) s.middleCols(i * k, k) = a[i] * u.basis();
  return Subspace::span(s, tuple_scale(a));
}

// dim AU as the numerical rank of (A_1 B ... A_m B), B a basis of U.
inline int dim_AU(const MatrixTuple& a, const Subspace& u) {
  require_dim(a, u.ambient(), "dim_AU");
  const int k = u.dim();
  if (k == 0) return 0;
  ComplexMatrix s(a.n(), static_cast<Eigen::Index>(k) * a.m());
  for (int i = 0; i < a.m(); ++i) s.middleCols(i * k, k) = a[i] * u.basis();
  return numerical_rank(s, tuple_scale(a));
}

// dim U - dim AU.
inline int shrinkage(const MatrixTuple& a, const Subspace& u) {
  return u.dim() - dim_AU(a, u);
}

// Flag U_1 < U_2 < ... < U_n spanned by leading eigenvectors.
struct Flag {
  std::vector<Subspace> prefixes;  // prefixes[i] = U_{i+1}
  RealVector gaps;                 // lambda_i - lambda_{i+1}, lambda_{n+1} = 0
};

inline Flag make_flag(const SpectralDecomposition& s) {
  const int n = static_cast<int>(s.eigenvalues.size());
  Flag fl;
  fl.gaps.resize(n);
  for (int i = 0; i < n; ++i) {
    fl.prefixes.emplace_back(n, s.eigenvectors.leftCols(i + 1));
    const double next = i + 1 < n ? s.eigenvalues(i + 1) : 0.0;
    fl.gaps(i) = s.eigenvalues(i) - next;
  }
  return fl;
}

// Recession function of the capacity at I in direction H. Eigenvalues closer
// than 1e-8 max(1, ||H||_inf) are grouped, so the value does not depend on
// the basis chosen inside an eigenspace.
inline double finfty_formula(const MatrixTuple& a, const Hermitian& h) {
  require_dim(a, h.dim(), "finfty_formula");
  require_left_support(a, "finfty_formula");
  const SpectralDecomposition s = herm_eig(h);
  const int n = h.dim();
  const double hinf = s.eigenvalues.cwiseAbs().maxCoeff();
  const double delta_gap = 1e-8 * std::max(1.0, hinf);
  double value = 0.0;
  // The i = n term vanishes under full support.
  for (int i = 0; i + 1 < n; ++i) {
    const double gap = s.eigenvalues(i) - s.eigenvalues(i + 1);
    if (gap < delta_gap) continue;
    const Subspace ui(n, s.eigenvectors.leftCols(i + 1));
    value += gap * (dim_AU(a, ui) - (i + 1));
  }
  return value;
}

namespace detail {

// log det sum_k A_k exp(tH) A_k^dagger in extended precision, via a
// column-pivoted QR of the row-graded matrix whose rows are
// e^{t lambda_j / 2} (A_k u_j)^dagger, sorted by decreasing lambda_j.
inline long double log_det_T_on_ray(const MatrixTuple& a,
                                    const SpectralDecomposition& s, double t) {
  using LComplex = std::complex<long double>;
  using LMatrix = Eigen::Matrix<LComplex, Eigen::Dynamic, Eigen::Dynamic>;
  const int n = a.n();
  const int m = a.m();
  const long double center =
      0.5L * (static_cast<long double>(s.eigenvalues(0)) +
              static_cast<long double>(s.eigenvalues(n - 1)));
  LMatrix rows(static_cast<Eigen::Index>(n) * m, n);
  for (int k = 0; k < m; ++k) {
    const ComplexMatrix ck = a[k] * s.eigenvectors;
    for (int j = 0; j < n; ++j) {
      const long double scale = std::exp(
          0.5L * static_cast<long double>(t) *
          (static_cast<long double>(s.eigenvalues(j)) - center));
      for (int c = 0; c < n; ++c) {
        const Complex z = std::conj(ck(c, j));
        rows(static_cast<Eigen::Index>(j) * m + k, c) =
            scale * LComplex(z.real(), z.imag());
      }
    }
  }
  Eigen::ColPivHouseholderQR<LMatrix> qr(rows);
  const LMatrix& r = qr.matrixQR();
  long double acc = 0.0L;
  for (int i = 0; i < n; ++i) acc += 2.0L * std::log(std::abs(r(i, i)));
  return acc + static_cast<long double>(n) * static_cast<long double>(t) *
                   center;
}

}  // namespace detail

// Largest t * ||H||_inf accepted by finfty_numeric (long double range).
inline constexpr double kMaxRayExtent = 5000.0;

// (f(exp(tH)) - f(I)) / t.
inline double finfty_numeric(const MatrixTuple& a, const Hermitian& h,
                             double t) {
  require_dim(a, h.dim(), "finfty_numeric");
  require_left_support(a, "finfty_numeric");
  if (!(t > 0.0)) throw InvalidInput("finfty_numeric: t must be positive");
  const SpectralDecomposition s = herm_eig(h);
  const double hinf = s.eigenvalues.cwiseAbs().maxCoeff();
  if (t * hinf > kMaxRayExtent) {
    throw InvalidInput("finfty_numeric: t * ||H||_inf exceeds 5000");
  }
  const long double log_det_t = detail::log_det_T_on_ray(a, s, t);
  const long double f_t =
      log_det_t - static_cast<long double>(t) *
                      static_cast<long double>(s.eigenvalues.sum());
  const double f_0 =
      evaluate_factor(a, ComplexMatrix::Identity(a.n(), a.n())).f();
  return static_cast<double>((f_t - f_0) / static_cast<long double>(t));
}

// Flag prefixes U_i of H at eigen-gaps larger than rel_tol * ||H||_inf,
// ordered by gap size (largest first).
inline std::vector<Subspace> round_direction(const Hermitian& h,
                                             double rel_tol = 1e-3) {
  const SpectralDecomposition s = herm_eig(h);
  const int n = h.dim();
  std::vector<Subspace> out;
  if (n == 0) return out;
  const double hinf = s.eigenvalues.cwiseAbs().maxCoeff();
  if (!(hinf > 1e-14)) return out;
  std::vector<std::pair<double, int>> gaps;
  for (int i = 0; i + 1 < n; ++i) {
    const double gap = s.eigenvalues(i) - s.eigenvalues(i + 1);
    if (gap > rel_tol * hinf) gaps.emplace_back(gap, i + 1);
  }
  std::stable_sort(gaps.begin(), gaps.end(),
                   [](const auto& x, const auto& y) { return x.first > y.first; });
  for (const auto& [gap, k] : gaps) {
    out.emplace_back(n, s.eigenvectors.leftCols(k));
  }
  return out;
}

// u diag(1, ..., 1, -1, ..., -1) u^dagger with the +1 block on U.
inline Hermitian flag_direction(const Subspace& u) {
  const int n = u.ambient();
  return Hermitian::symmetrized(2.0 * u.basis() * u.basis().adjoint() -
                   ComplexMatrix::Identity(n, n));
}

// max over trials of rank(sum_k A_k (x) R_k), R_k standard complex Gaussian
// d x d, trial i drawn from a generator seeded with seed + i.
inline int blowup_rank(const MatrixTuple& a, int d, int trials,
                       std::uint64_t seed) {
  if (d < 1 || trials < 1) {
    throw InvalidInput("blowup_rank: d and trials must be >= 1");
  }
  const int n = a.n();
  int best = 0;
  for (int t = 0; t < trials; ++t) {
    Rng rng(seed + static_cast<std::uint64_t>(t));
    ComplexMatrix big = ComplexMatrix::Zero(static_cast<Eigen::Index>(n) * d,
                                            static_cast<Eigen::Index>(n) * d);
    for (int k = 0; k < a.m(); ++k) {
      const ComplexMatrix r = random_gaussian(rng, d, d);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          if (a[k](i, j) != Complex(0.0))
            big.block(i * d, j * d, d, d) += a[k](i, j) * r;
    }
    best = std::max(best, numerical_rank(big));
  }
  return best;
}

struct BlowupWitness {
  int d = 1;
  std::uint64_t seed = 0;
  int trials = 1;
  int rank = 0;
};

struct RankCertificate {
  int n = 0;
  int ncrank = 0;  // best upper bound
  int upper = 0;
  int lower = 0;
  Subspace upper_witness;  // n - (dim U - dim AU) = upper
  BlowupWitness lower_witness;  // ceil(rank / d) = lower
  bool certified = false;

  int corank() const { return n - ncrank; }
};

struct Reduction {
  MatrixTuple reduced;        // n' x n' leading block of g^dagger A h
  ScalingPair transform;      // unitary (g, h)
  int left_defect = 0;        // n - rank(A_1 ... A_m)
  int right_defect = 0;       // n - rank(A_1^dagger ... A_m^dagger)
  int offset = 0;             // n - n'

  int reduced_dim() const { return reduced.n(); }
};

// Brings a support-deficient tuple to the block form g^dagger A_k h =
// (B_k 0; 0 0) with unitary g, h. g orders the range of (A_1 ... A_m) first,
// h orders the complement of the common kernel first, and n' is the larger of
// the two ranks, so B has full support on at least one side. Then
// corank(A) = (n - n') + corank(B).
inline Reduction reduce_tuple(const MatrixTuple& a) {
  const int n = a.n();
  const SupportRanks r = check_full_support(a);
  if (r.left_rank == n && r.right_rank == n) {
    throw NoReductionNeeded("reduce_tuple: tuple already has full support");
  }
  const int np = std::max(r.left_rank, r.right_rank);
  if (np == 0) {
    throw InvalidInput("reduce_tuple: zero tuple has no reduced form");
  }
  // Already in block form: keep the coordinates.
  bool in_block_form = true;
  for (const auto& ak : a.matrices()) {
    if (ak.bottomRows(n - np).cwiseAbs().maxCoeff() != 0.0 ||
        ak.rightCols(n - np).cwiseAbs().maxCoeff() != 0.0) {
      in_block_form = false;
      break;
    }
  }
  ComplexMatrix g = ComplexMatrix::Identity(n, n);
  ComplexMatrix h = ComplexMatrix::Identity(n, n);
  if (!in_block_form) {
    const ComplexMatrix left = range_basis(a.horizontal_stack());
    g.leftCols(left.cols()) = left;
    g.rightCols(n - left.cols()) = complement_basis(left);
    const ComplexMatrix right = range_basis(a.vertical_stack().adjoint());
    h.leftCols(right.cols()) = right;
    h.rightCols(n - right.cols()) = complement_basis(right);
  }
  double scale = 1.0;
  for (const auto& ak : a.matrices()) {
    scale = std::max(scale, ak.cwiseAbs().maxCoeff());
  }
  std::vector<ComplexMatrix> blocks;
  for (const auto& ak : a.matrices()) {
    const ComplexMatrix full = g.adjoint() * ak * h;
    const double off = std::max(
        n > np ? full.bottomRows(n - np).cwiseAbs().maxCoeff() : 0.0,
        n > np ? full.rightCols(n - np).cwiseAbs().maxCoeff() : 0.0);
    if (off > 1e-10 * scale) {
      std::ostringstream os;
      os << "reduce_tuple: zero blocks not verified (max entry " << off << ")";
      throw Error(os.str());
    }
    blocks.push_back(full.topLeftCorner(np, np));
  }
  return {MatrixTuple(std::move(blocks)), ScalingPair(g, h),
          n - r.left_rank, n - r.right_rank, n - np};
}

namespace detail {

// Candidate U for A from a candidate W for the adjoint tuple:
// U = (A^dagger W)^perp satisfies dim U - dim AU >= dim W - dim A^dagger W.
inline Subspace from_adjoint_candidate(const MatrixTuple& adj,
                                       const Subspace& w) {
  return image(adj, w).orthogonal_complement();
}

inline std::vector<Subspace> singular_flags(const ComplexMatrix& m, int n) {
  std::vector<Subspace> out;
  Eigen::JacobiSVD<ComplexMatrix> svd(m, Eigen::ComputeFullV);
  const ComplexMatrix& v = svd.matrixV();  // n x n
  for (int k = 1; k < n; ++k) {
    out.emplace_back(n, v.leftCols(k));
    out.emplace_back(n, v.rightCols(k));
  }
  return out;
}

inline std::vector<Subspace> cheap_candidates(const MatrixTuple& a) {
  const int n = a.n();
  std::vector<Subspace> out;
  out.push_back(Subspace::whole(n));
  if (n <= 12) {
    for (std::uint32_t mask = 1; mask + 1 < (1u << n); ++mask) {
      std::vector<int> idx;
      for (int i = 0; i < n; ++i)
        if (mask & (1u << i)) idx.push_back(i);
      out.push_back(Subspace::coordinate(n, idx));
    }
  }
  // Right singular vectors of (A_1; ...; A_m): the common kernel comes last.
  for (auto& s : singular_flags(a.vertical_stack(), n)) out.push_back(std::move(s));
  const MatrixTuple adj = a.adjoint();
  for (const auto& w : singular_flags(adj.vertical_stack(), n)) {
    out.push_back(from_adjoint_candidate(adj, w));
  }
  return out;
}

inline void add_directions(const FlowTrace& trace, const FlowConfig& cfg,
                           std::vector<Subspace>& out) {
  std::vector<Hermitian> dirs;
  if (auto tail = tail_direction(trace, cfg.direction_window)) {
    dirs.push_back(*tail);
  }
  const int count = static_cast<int>(trace.records.size());
  for (int i = count - 1; i >= 0; i -= 25) {
    if (trace.records[i].direction) dirs.push_back(*trace.records[i].direction);
  }
  for (const auto& h : dirs) {
    for (auto& u : round_direction(h, cfg.round_tol)) out.push_back(std::move(u));
  }
}

inline FlowTrace certification_flow(const MatrixTuple& a,
                                    const FlowConfig& cfg) {
  FlowConfig c = cfg;
  c.tolerance = 0.0;
  return run_gradient_descent(a, PDPoint::identity(a.n()), c);
}

// Snaps an approximate witness onto an exact one. For each guess r < dim U
// of dim AU, alternate: W = top-r left singular space of (A_1 B ... A_m B),
// then B = least right singular space of the stack (I - P_W) A_k, i.e. the
// subspace closest to satisfying A_k U within W.
inline std::vector<Subspace> refine_candidate(const MatrixTuple& a,
                                              const Subspace& u,
                                              int max_passes = 50) {
  const int n = a.n();
  const int k = u.dim();
  std::vector<Subspace> out;
  if (k == 0 || k == n) return out;
  const double floor = rank_threshold(n, static_cast<Eigen::Index>(k) * a.m(),
                                      tuple_scale(a));
  for (int r = 0; r < k; ++r) {
    ComplexMatrix b = u.basis();
    double prev = kInf;
    for (int pass = 0; pass < max_passes; ++pass) {
      ComplexMatrix s(n, static_cast<Eigen::Index>(k) * a.m());
      for (int i = 0; i < a.m(); ++i) s.middleCols(i * k, k) = a[i] * b;
      Eigen::JacobiSVD<ComplexMatrix> ws(s, Eigen::ComputeFullU);
      const double tail = ws.singularValues()(r);  // mass outside W
      if (tail <= floor || tail > 0.99 * prev) break;
      prev = tail;
      const ComplexMatrix w = ws.matrixU().leftCols(r);
      const ComplexMatrix proj = ComplexMatrix::Identity(n, n) - w * w.adjoint();
      ComplexMatrix m(static_cast<Eigen::Index>(n) * a.m(), n);
      for (int i = 0; i < a.m(); ++i) m.middleRows(i * n, n) = proj * a[i];
      Eigen::JacobiSVD<ComplexMatrix> vs(m, Eigen::ComputeFullV);
      b = vs.matrixV().rightCols(k);
    }
    out.emplace_back(n, b);
  }
  return out;
}

inline std::vector<Subspace> flow_candidates(const MatrixTuple& a,
                                             const FlowConfig& cfg) {
  const int n = a.n();
  std::vector<Subspace> out;
  const SupportRanks r = check_full_support(a);
  if (r.left_rank == n) {
    add_directions(certification_flow(a, cfg), cfg, out);
  }
  if (r.right_rank == n) {
    const MatrixTuple adj = a.adjoint();
    std::vector<Subspace> ws;
    add_directions(certification_flow(adj, cfg), cfg, ws);
    for (const auto& w : ws) out.push_back(from_adjoint_candidate(adj, w));
  }
  if (r.left_rank < n && r.right_rank < n) {
    const int np = std::max(r.left_rank, r.right_rank);
    if (np == 0) return out;
    const Reduction red = reduce_tuple(a);
    const ComplexMatrix& h = red.transform.h();
    for (const auto& v : flow_candidates(red.reduced, cfg)) {
      ComplexMatrix b = ComplexMatrix::Zero(n, v.dim() + (n - np));
      b.topLeftCorner(np, v.dim()) = v.basis();
      b.bottomRightCorner(n - np, n - np) =
          ComplexMatrix::Identity(n - np, n - np);
      out.push_back(Subspace::span(h * b));
    }
  }
  return out;
}

}  // namespace detail

// nc-rank with an upper-bound subspace witness and a blow-up lower bound.
inline RankCertificate ncrank(const MatrixTuple& a, const FlowConfig& cfg) {
  const int n = a.n();
  RankCertificate cert;
  cert.n = n;
  cert.upper_witness = Subspace::zero(n);
  int best_shrink = 0;
  auto consider = [&](const Subspace& u) {
    const int s = shrinkage(a, u);
    if (s > best_shrink) {
      best_shrink = s;
      cert.upper_witness = u;
    }
  };
  for (const auto& u : detail::cheap_candidates(a)) consider(u);

  const int max_d = cfg.max_blowup_dim > 0
                        ? std::min(cfg.max_blowup_dim, std::max(1, n - 1))
                        : std::max(1, n - 1);
  int d_next = 1;
  cert.lower = 0;
  cert.lower_witness = {1, cfg.seed, cfg.blowup_trials, 0};
  auto raise_lower = [&](int target) {
    for (; d_next <= max_d && cert.lower < target; ++d_next) {
      const int rank = blowup_rank(a, d_next, cfg.blowup_trials, cfg.seed);
      const int lb = (rank + d_next - 1) / d_next;
      if (lb > cert.lower) {
        cert.lower = lb;
        cert.lower_witness = {d_next, cfg.seed, cfg.blowup_trials, rank};
      }
    }
  };
  raise_lower(n - best_shrink);
  if (cert.lower < n - best_shrink) {
    for (const auto& u : detail::flow_candidates(a, cfg)) {
      consider(u);
      for (const auto& v : detail::refine_candidate(a, u)) consider(v);
    }
    raise_lower(n - best_shrink);
  }
  cert.upper = n - best_shrink;
  cert.ncrank = cert.upper;
  cert.certified = cert.lower == cert.upper;
  return cert;
}

struct BallMinimum {
  double value = 0.0;     // 2 min_U (dim AU - dim U)
  Subspace witness;
  Hermitian direction;    // flag_direction(witness), ||.||_inf <= 1
  bool certified = false;
};

// inf_{||H||_inf <= 1} f^inf(H) = 2 min_U (dim AU - dim U).
inline BallMinimum min_finfty_ball(const MatrixTuple& a,
                                   const FlowConfig& cfg) {
  require_left_support(a, "min_finfty_ball");
  const RankCertificate cert = ncrank(a, cfg);
  BallMinimum out;
  out.witness = cert.upper_witness;
  out.value = 2.0 * (dim_AU(a, out.witness) - out.witness.dim());
  out.direction = flag_direction(out.witness);
  out.certified = cert.certified;
  return out;
}

}  // namespace ncscale

#endif  // NCSCALE_NCRANK_HPP_
