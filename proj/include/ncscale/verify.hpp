#ifndef NCSCALE_VERIFY_HPP_
#define NCSCALE_VERIFY_HPP_

// Property suites over random and structured samples. Each check records how
// far a measured quantity exceeds its allowed bound; a check passes when no
// sample exceeds it.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "ncscale/cp_operator.hpp"
#include "ncscale/generators.hpp"
#include "ncscale/linalg.hpp"
#include "ncscale/ncrank.hpp"
#include "ncscale/pd_manifold.hpp"
#include "ncscale/random.hpp"

namespace ncscale {

struct Check {
  std::string name;
  int count = 0;
  int failures = 0;
  double max_violation = 0.0;  // largest excess over the bound (<= 0 if none)
  bool initialized = false;

  // excess = measured - allowed; a sample fails when excess > 0 or NaN.
  void record(double excess) {
    ++count;
    if (!initialized || excess > max_violation || std::isnan(excess)) {
      max_violation = excess;
      initialized = true;
    }
    if (!(excess <= 0.0)) ++failures;
  }
  bool passed() const { return count > 0 && failures == 0; }
};

struct SuiteResult {
  std::string name;
  std::vector<Check> checks;

  Check& check(const std::string& n) {
    for (auto& c : checks)
      if (c.name == n) return c;
    checks.push_back({n});
    return checks.back();
  }
  bool passed() const {
    return std::all_of(checks.begin(), checks.end(),
                       [](const Check& c) { return c.passed(); });
  }
};

inline const std::vector<PermInvariantNorm>& verify_norms() {
  static const std::vector<PermInvariantNorm> v = {
      PermInvariantNorm::l1(), PermInvariantNorm::l2(),
      PermInvariantNorm::lp(3.0), PermInvariantNorm::linf()};
  return v;
}

// Norm axioms, unitary invariance, duality pairing and its equality case,
// diagonal contraction, and trace norm against singular values.
inline SuiteResult suite_norms(std::uint64_t seed, int samples = 500) {
  SuiteResult out{"norms", {}};
  Rng rng(seed);
  const double tol = 1e-9;
  for (int n = 2; n <= 6; ++n) {
    for (const auto& v : verify_norms()) {
      for (int s = 0; s < samples; ++s) {
        const Hermitian x = random_hermitian(rng, n);
        const Hermitian y = random_hermitian(rng, n);
        const double nx = schatten_norm(x, v);
        const double ny = schatten_norm(y, v);
        const double scale = std::max(1.0, nx + ny);
        out.check("nonnegative").record(-nx);
        out.check("triangle").record(schatten_norm(x + y, v) - nx - ny -
                                     tol * scale);
        const double a = 2.0 * std::abs(complex_gaussian(rng));
        out.check("homogeneity").record(
            std::abs(schatten_norm(a * x, v) - a * nx) - tol * scale * (1 + a));
        const ComplexMatrix w = random_unitary(rng, n);
        out.check("unitary_invariance")
            .record(std::abs(schatten_norm(congruence(w, x), v) - nx) -
                    tol * scale);
        out.check("duality_pairing")
            .record(trace_pairing(x, y) - nx * dual_norm(y, v) - tol * scale);
        const SpectralDecomposition sx = herm_eig(x);
        const RealVector yv = v.norming_vector(sx.eigenvalues);
        const Hermitian opt = Hermitian::symmetrized(
            sx.eigenvectors * yv.cast<Complex>().asDiagonal() *
            sx.eigenvectors.adjoint());
        out.check("duality_equality")
            .record(std::max(std::abs(trace_pairing(x, opt) - nx),
                             std::abs(dual_norm(opt, v) - 1.0)) -
                    tol * scale);
        out.check("diagonal_contraction")
            .record(v(diag_project(x)) - nx - tol * scale);
      }
    }
    for (int s = 0; s < samples; ++s) {
      const Hermitian x = random_hermitian(rng, n);
      Eigen::JacobiSVD<ComplexMatrix> svd(x.matrix());
      out.check("trace_norm_singular_values")
          .record(std::abs(schatten_norm(x, PermInvariantNorm::l1()) -
                           svd.singularValues().sum()) -
                  1e-9 * std::max(1.0, svd.singularValues().sum()));
    }
  }
  const Hermitian zero = Hermitian::zero(3);
  for (const auto& v : verify_norms()) {
    out.check("definiteness").record(schatten_norm(zero, v));
  }
  return out;
}

// Symmetry, triangle inequality, GL_n invariance and geodesic
// distance-realization for d_v.
inline SuiteResult suite_geometry(std::uint64_t seed, int triples = 200,
                                  int congruences = 100) {
  SuiteResult out{"geometry", {}};
  Rng rng(seed);
  const double tol = 1e-8;
  const std::vector<PermInvariantNorm> norms = {
      PermInvariantNorm::l1(), PermInvariantNorm::l2(),
      PermInvariantNorm::linf()};
  std::uniform_int_distribution<int> dim(2, 5);
  for (const auto& v : norms) {
    for (int s = 0; s < triples; ++s) {
      const int n = dim(rng);
      const PDPoint x(random_pd(rng, n, 1.5));
      const PDPoint y(random_pd(rng, n, 1.5));
      const PDPoint z(random_pd(rng, n, 1.5));
      const double dxy = finsler_dist(x, y, v);
      const double dyz = finsler_dist(y, z, v);
      const double dxz = finsler_dist(x, z, v);
      const double scale = std::max(1.0, dxy + dyz);
      out.check("symmetry").record(std::abs(dxy - finsler_dist(y, x, v)) -
                                   tol * scale);
      out.check("triangle").record(dxz - dxy - dyz - tol * scale);
      out.check("identity_of_indiscernibles")
          .record(finsler_dist(x, x, v) - tol);

      // Geodesic through X with velocity H realizes |s - t| ||H||_{v,X}.
      const Hermitian h = random_hermitian(rng, n, 0.5);
      const double s0 = -0.7;
      const double t0 = 1.3;
      const double expect = (t0 - s0) * tangent_norm(x, h, v);
      const double got =
          finsler_dist(geodesic(x, h, s0), geodesic(x, h, t0), v);
      out.check("geodesic_realizes_distance")
          .record(std::abs(got - expect) - tol * std::max(1.0, expect));
      const PDPoint mid = geodesic_between(x, y, 0.5);
      out.check("geodesic_midpoint")
          .record(std::abs(finsler_dist(x, mid, v) - 0.5 * dxy) -
                  tol * scale);
    }
    for (int s = 0; s < congruences; ++s) {
      const int n = dim(rng);
      const PDPoint x(random_pd(rng, n, 1.5));
      const PDPoint y(random_pd(rng, n, 1.5));
      const Hermitian h = random_hermitian(rng, n);
      const Hermitian f = random_hermitian(rng, n);
      const ComplexMatrix g = random_gl(rng, n, 1.0);
      const PDPoint gx(congruence(g, x.hermitian()));
      const PDPoint gy(congruence(g, y.hermitian()));
      const double d = finsler_dist(x, y, v);
      out.check("gl_invariance_distance")
          .record(std::abs(finsler_dist(gx, gy, v) - d) -
                  tol * std::max(1.0, d));
      const double tn = tangent_norm(x, h, v);
      out.check("gl_invariance_tangent")
          .record(std::abs(tangent_norm(gx, congruence(g, h), v) - tn) -
                  tol * std::max(1.0, tn));
      // Cotangent vectors transform with the inverse adjoint.
      const ComplexMatrix gi = g.inverse();
      const double cn = cotangent_dual_norm(x, f, v);
      out.check("gl_invariance_cotangent")
          .record(std::abs(cotangent_dual_norm(gx, congruence(gi.adjoint(), f),
                                               v) -
                           cn) -
                  tol * std::max(1.0, cn));
    }
  }
  return out;
}

namespace detail {

inline MatrixTuple random_tuple(Rng& rng, int n, int m) {
  std::vector<ComplexMatrix> mats;
  for (int k = 0; k < m; ++k) mats.push_back(random_gaussian(rng, n, n));
  return MatrixTuple(std::move(mats));
}

// Hermitian basis element number idx of n x n Hermitian matrices (n^2 real
// dimensions): diagonal units, then symmetric and antisymmetric pairs.
inline Hermitian hermitian_basis(int n, int idx) {
  ComplexMatrix e = ComplexMatrix::Zero(n, n);
  if (idx < n) {
    e(idx, idx) = 1.0;
    return Hermitian::symmetrized(e);
  }
  idx -= n;
  const bool imag = idx % 2 == 1;
  idx /= 2;
  int i = 0;
  int j = 1;
  for (int c = 0; c < idx; ++c) {
    if (++j == n) {
      ++i;
      j = i + 1;
    }
  }
  const Complex z = imag ? Complex(0.0, 1.0) : Complex(1.0, 0.0);
  e(i, j) = z;
  e(j, i) = std::conj(z);
  return Hermitian::symmetrized(e);
}

}  // namespace detail

// Central finite differences of f against grad_f, and the identity
// right residual = ||df||*_{inf,X}.
inline SuiteResult suite_gradcheck(std::uint64_t seed, int samples = 50) {
  SuiteResult out{"gradcheck", {}};
  Rng rng(seed);
  std::uniform_int_distribution<int> dim(2, 5);
  std::uniform_int_distribution<int> cnt(1, 4);
  const double eps = 1e-5;
  for (int s = 0; s < samples; ++s) {
    const int n = dim(rng);
    const int m = cnt(rng);
    const MatrixTuple a = detail::random_tuple(rng, n, m);
    const PDPoint x(random_pd(rng, n, 1.0));
    const CotangentVector df = grad_f(a, x);
    const int dims = n * n;
    double err2 = 0.0;
    // Both terms of df = A^dagger T^{-1} A - X^{-1} are of the size of X^{-1};
    // for m = 1 they cancel exactly and df = 0.
    double ref2 = x.inverse().squaredNorm();
    for (int b = 0; b < dims; ++b) {
      const Hermitian e = detail::hermitian_basis(n, b);
      const double fp = capacity_f(a, PDPoint(x.hermitian() + eps * e));
      const double fm = capacity_f(a, PDPoint(x.hermitian() - eps * e));
      const double fd = (fp - fm) / (2.0 * eps);
      const double exact = trace_pairing(df.form, e);
      err2 += (fd - exact) * (fd - exact);
    }
    out.check("finite_difference_rel_error")
        .record(std::sqrt(err2 / std::max(ref2, 1e-300)) - 1e-5);
    const PointScaling ps = scaling_from_point(a, x);
    const double slope_inf = cotangent_dual_norm(x, df.form,
                                                 PermInvariantNorm::linf());
    out.check("right_residual_equals_slope")
        .record(std::abs(ps.report.right - slope_inf) -
                1e-8 * std::max(1.0, slope_inf));
  }
  return out;
}

// Recession formula against the numeric limit, monotonicity in t and
// positive homogeneity.
inline SuiteResult suite_finfty(std::uint64_t seed, int samples = 100) {
  SuiteResult out{"finfty", {}};
  Rng rng(seed);
  std::uniform_int_distribution<int> dim(2, 4);
  std::uniform_int_distribution<int> cnt(1, 3);
  std::uniform_int_distribution<int> coin(0, 1);
  int done = 0;
  while (done < samples) {
    const int n = dim(rng);
    const int m = cnt(rng);
    // Half of the samples carry a planted shrunk subspace.
    MatrixTuple a = detail::random_tuple(rng, n, m);
    if (coin(rng) == 1 && n >= 2) {
      std::uniform_int_distribution<int> kd(1, n - 1);
      const int k = kd(rng);
      std::vector<ComplexMatrix> mats = a.matrices();
      for (auto& mk : mats) mk.topLeftCorner(n - k + 1, k).setZero();
      a = MatrixTuple(std::move(mats));
    }
    if (check_full_support(a).left_rank < n) continue;
    ++done;
    // Directions: random, or the flag direction of a coordinate subspace
    // (where f^inf is non-smooth and most informative).
    Hermitian h = random_hermitian(rng, n, 2.0);
    if (coin(rng) == 1) {
      std::uniform_int_distribution<int> kd(1, n - 1);
      h = flag_direction(Subspace::coordinate(
          n, [&] {
            std::vector<int> idx(kd(rng));
            std::iota(idx.begin(), idx.end(), 0);
            return idx;
          }()));
    }
    const double hinf = herm_eig(h).eigenvalues.cwiseAbs().maxCoeff();
    const double formula = finfty_formula(a, h);
    const double t = 1000.0 / std::max(1.0, hinf);
    const double numeric = finfty_numeric(a, h, t);
    out.check("formula_vs_limit").record(std::abs(formula - numeric) - 5e-2);
    // Difference quotients of a convex function increase with t and stay
    // below the recession value.
    double prev = -kInf;
    for (double tt : {1.0, 10.0, 100.0, 1000.0}) {
      const double q = finfty_numeric(a, h, tt / std::max(1.0, hinf));
      out.check("monotone_in_t").record(prev - q - 1e-9 * std::max(1.0, std::abs(q)));
      prev = q;
    }
    out.check("limit_bounded_by_formula")
        .record(numeric - formula - 1e-9 * std::max(1.0, std::abs(formula)));
    const double c = 0.1 + 3.0 * std::abs(complex_gaussian(rng));
    out.check("positive_homogeneity")
        .record(std::abs(finfty_formula(a, c * h) - c * formula) - 1e-9);
  }
  return out;
}

// residual_sum_l1(g^dagger A h) >= 2 (dim U - dim AU) on random data.
inline SuiteResult suite_weak_duality(std::uint64_t seed, int samples = 1000) {
  SuiteResult out{"weak-duality", {}};
  Rng rng(seed);
  std::uniform_int_distribution<int> dim(2, 5);
  std::uniform_int_distribution<int> cnt(1, 3);
  for (int s = 0; s < samples; ++s) {
    const int n = dim(rng);
    const int m = cnt(rng);
    std::uniform_int_distribution<int> kd(1, n);
    const int k = kd(rng);
    std::uniform_int_distribution<int> ld(0, k - 1);
    const int l = ld(rng);
    std::vector<ComplexMatrix> mats;
    for (int i = 0; i < m; ++i) {
      ComplexMatrix mk = random_gaussian(rng, n, n);
      mk.topLeftCorner(n - l, k).setZero();
      mats.push_back(mk);
    }
    // Hide the structure behind a random change of basis.
    const ComplexMatrix p = random_gl(rng, n, 0.5);
    const ComplexMatrix q = random_gl(rng, n, 0.5);
    for (auto& mk : mats) mk = p * mk * q;
    const MatrixTuple a(std::move(mats));
    std::vector<int> idx(k);
    std::iota(idx.begin(), idx.end(), 0);
    // U = q^{-1} span(e_1..e_k), or a random subspace.
    Subspace u = Subspace::span(q.inverse() *
                                Subspace::coordinate(n, idx).basis());
    if (s % 4 == 3) u = Subspace::span(random_gaussian(rng, n, k));
    const ScalingPair sp(random_gl(rng, n, 1.5), random_gl(rng, n, 1.5));
    const ResidualReport r = residual(a, sp, PermInvariantNorm::l1());
    out.check("residual_lower_bound")
        .record(2.0 * shrinkage(a, u) - r.sum - 1e-8);
  }
  return out;
}

// The explicit ray X(t) = exp(t H_U), H_U = 2 P_U - I, for the witness U of a
// certified corank-c instance: residual_sum_l1 in [2c, 2c + 0.05].
inline SuiteResult suite_duality(const Instance& inst, double t = 20.0) {
  SuiteResult out{"duality", {}};
  const MatrixTuple& a = inst.tuple;
  FlowConfig cfg;
  const RankCertificate cert = ncrank(a, cfg);
  out.check("certified").record(cert.certified ? -1.0 : 1.0);
  const double c = cert.corank();
  const Hermitian hu = flag_direction(cert.upper_witness);
  const PointScaling ps = scaling_from_log_point(a, t * hu);
  out.check("residual_at_least_2c").record(2.0 * c - ps.report.sum - 1e-9);
  out.check("residual_within_2c_plus_0.05")
      .record(ps.report.sum - (2.0 * c + 0.05));
  return out;
}

// Certification of the structured families and certificate soundness.
inline SuiteResult suite_certify(std::uint64_t seed) {
  SuiteResult out{"certify", {}};
  std::vector<Instance> insts;
  insts.push_back(make_skew3());
  insts.push_back(make_e4());
  insts.push_back(make_identity(4));
  const int shapes[][4] = {{2, 1, 0, 2}, {3, 2, 1, 2}, {3, 2, 0, 3},
                           {4, 3, 1, 2}, {4, 2, 1, 2}, {5, 3, 1, 2}};
  for (const auto& sh : shapes) {
    insts.push_back(make_zero_block(sh[0], sh[1], sh[2], sh[3], seed));
  }
  FlowConfig cfg;
  cfg.seed = seed;
  for (const auto& inst : insts) {
    const RankCertificate cert = ncrank(inst.tuple, cfg);
    out.check("certified").record(cert.certified ? -1.0 : 1.0);
    out.check("matches_construction")
        .record(std::abs(cert.ncrank - *inst.known_ncrank));
    // Witnesses reproduce the stated bounds.
    const int upper = inst.tuple.n() - shrinkage(inst.tuple, cert.upper_witness);
    out.check("upper_witness_reproduces").record(std::abs(upper - cert.upper));
    const BlowupWitness& w = cert.lower_witness;
    const int rank = blowup_rank(inst.tuple, w.d, w.trials, w.seed);
    const int lower = (rank + w.d - 1) / w.d;
    out.check("blowup_witness_reproduces")
        .record(std::abs(rank - w.rank) + std::abs(lower - cert.lower));
  }
  return out;
}

inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = {
      "norms", "geometry", "gradcheck", "finfty",
      "weak-duality", "duality", "certify"};
  return names;
}

inline SuiteResult run_suite(const std::string& name, std::uint64_t seed,
                             const Instance* inst = nullptr) {
  if (name == "norms") return suite_norms(seed);
  if (name == "geometry") return suite_geometry(seed);
  if (name == "gradcheck") return suite_gradcheck(seed);
  if (name == "finfty") return suite_finfty(seed);
  if (name == "weak-duality") return suite_weak_duality(seed);
  if (name == "duality") return suite_duality(inst ? *inst : make_e4());
  if (name == "certify") return suite_certify(seed);
  throw InvalidInput("verify: unknown suite '" + name + "'");
}

}  // namespace ncscale

#endif  // NCSCALE_VERIFY_HPP_
