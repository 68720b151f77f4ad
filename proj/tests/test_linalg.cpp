#include <gtest/gtest.h>

#include <cmath>

#include "ncscale/linalg.hpp"
#include "ncscale/random.hpp"
#include "ncscale/verify.hpp"

using namespace ncscale;

namespace {

Hermitian diag3(double a, double b, double c) {
  return Hermitian::diagonal(Eigen::Vector3d(a, b, c));
}

}  // namespace

TEST(Hermitian, RejectsAntiHermitianInput) {
  ComplexMatrix m(2, 2);
  m << 1, 2, 0, 1;
  EXPECT_THROW(Hermitian{m}, InvalidInput);
  EXPECT_THROW(Hermitian{ComplexMatrix::Zero(2, 3)}, DimensionMismatch);
}

TEST(Hermitian, SymmetrizesSmallDefects) {
  ComplexMatrix m(2, 2);
  m << 1, Complex(2, 1e-12), Complex(2, 0), 3;
  const Hermitian h(m);
  EXPECT_EQ(h.matrix(), h.matrix().adjoint());
  EXPECT_NEAR(h.matrix()(0, 1).imag(), 5e-13, 1e-20);
}

TEST(Hermitian, SymmetrizedSkipsRelativeCheck) {
  ComplexMatrix m = ComplexMatrix::Zero(2, 2);
  m(0, 1) = 1e-20;
  EXPECT_THROW(Hermitian{m}, InvalidInput);
  EXPECT_NO_THROW(Hermitian::symmetrized(m));
}

TEST(Hermitian, RejectsNonFinite) {
  ComplexMatrix m = ComplexMatrix::Identity(2, 2);
  m(0, 0) = std::nan("");
  EXPECT_THROW(Hermitian{m}, InvalidInput);
}

TEST(HermEig, DescendingOrderAndReconstruction) {
  Rng rng(3);
  for (int n = 1; n <= 6; ++n) {
    const Hermitian h = random_hermitian(rng, n);
    const SpectralDecomposition s = herm_eig(h);
    for (int i = 0; i + 1 < n; ++i) EXPECT_GE(s.eigenvalues(i), s.eigenvalues(i + 1));
    EXPECT_LT((s.reconstruct() - h.matrix()).norm(), 1e-12);
    const ComplexMatrix u = s.eigenvectors;
    EXPECT_LT((u.adjoint() * u - ComplexMatrix::Identity(n, n)).norm(), 1e-12);
  }
}

TEST(HermEig, PhaseConventionIsDeterministic) {
  Rng rng(5);
  const Hermitian h = random_hermitian(rng, 4);
  const SpectralDecomposition s = herm_eig(h);
  for (int j = 0; j < 4; ++j) {
    EXPECT_NEAR(s.eigenvectors(0, j).imag(), 0.0, 1e-14);
    EXPECT_GT(s.eigenvectors(0, j).real(), 0.0);
  }
}

TEST(Norms, DiagonalExamples) {
  const Hermitian h = diag3(1, -2, 3);
  EXPECT_DOUBLE_EQ(schatten_norm(h, PermInvariantNorm::l1()), 6.0);
  EXPECT_NEAR(schatten_norm(h, PermInvariantNorm::l2()), std::sqrt(14.0), 1e-15);
  EXPECT_DOUBLE_EQ(schatten_norm(h, PermInvariantNorm::linf()), 3.0);
  EXPECT_NEAR(schatten_norm(h, PermInvariantNorm::lp(3)), std::cbrt(36.0), 1e-14);
  EXPECT_DOUBLE_EQ(dual_norm(h, PermInvariantNorm::l1()), 3.0);
  EXPECT_DOUBLE_EQ(dual_norm(h, PermInvariantNorm::linf()), 6.0);
}

TEST(Norms, DualExponents) {
  EXPECT_TRUE(PermInvariantNorm::l1().dual().is_inf());
  EXPECT_EQ(PermInvariantNorm::linf().dual().p(), 1.0);
  EXPECT_DOUBLE_EQ(PermInvariantNorm::lp(3).dual().p(), 1.5);
  EXPECT_DOUBLE_EQ(PermInvariantNorm::l2().dual().p(), 2.0);
  EXPECT_THROW(PermInvariantNorm(0.5), InvalidInput);
}

TEST(Norms, NormingVectorAttainsDuality) {
  Rng rng(11);
  for (const auto& v : verify_norms()) {
    for (int s = 0; s < 20; ++s) {
      RealVector x = random_gaussian(rng, 5, 1).real();
      const RealVector y = v.norming_vector(x);
      EXPECT_NEAR(y.dot(x), v(x), 1e-10 * v(x));
      EXPECT_NEAR(v.dual()(y), 1.0, 1e-10);
    }
  }
  EXPECT_EQ(PermInvariantNorm::l2().norming_vector(RealVector::Zero(3)).norm(), 0.0);
}

TEST(Norms, LpLargeExponentAvoidsOverflow) {
  const Hermitian h = diag3(1e200, 1e200, 0);
  EXPECT_NEAR(schatten_norm(h, PermInvariantNorm::lp(8)) / 1e200,
              std::pow(2.0, 1.0 / 8.0), 1e-12);
}

TEST(Norms, PropertySuiteSmall) {
  const SuiteResult r = suite_norms(7, 40);
  for (const auto& c : r.checks) {
    EXPECT_TRUE(c.passed()) << c.name << " max violation " << c.max_violation;
  }
}

TEST(Spectral, ExpLogRoundTrip) {
  Rng rng(13);
  const Hermitian x = random_pd(rng, 4, 2.0);
  const ComplexMatrix back = mat_exp(mat_log(x));
  EXPECT_LT((back - x.matrix()).norm(), 1e-12 * x.matrix().norm());
  const ComplexMatrix r = mat_sqrt(x);
  EXPECT_LT((r * r - x.matrix()).norm(), 1e-12 * x.matrix().norm());
  const ComplexMatrix ri = mat_inv_sqrt(x);
  EXPECT_LT((ri * r - ComplexMatrix::Identity(4, 4)).norm(), 1e-12);
}

TEST(Spectral, LogRejectsIndefinite) {
  EXPECT_THROW(mat_log(diag3(1, 0, 2)), DomainError);
  try {
    mat_inv_sqrt(diag3(1, -1, 2));
    FAIL();
  } catch (const DomainError& e) {
    EXPECT_DOUBLE_EQ(e.smallest_eigenvalue(), -1.0);
  }
}

TEST(Spectral, DiagProject) {
  ComplexMatrix m(2, 2);
  m << 2, Complex(0, 1), Complex(0, -1), -1;
  EXPECT_EQ(diag_project(Hermitian(m)), Eigen::Vector2d(2, -1));
}

TEST(Rank, ExactStructures) {
  ComplexMatrix m = ComplexMatrix::Zero(4, 4);
  m(0, 1) = 1;
  m(2, 3) = 2;
  EXPECT_EQ(numerical_rank(m), 2);
  EXPECT_EQ(numerical_rank(ComplexMatrix::Zero(3, 3)), 0);
  EXPECT_EQ(numerical_rank(ComplexMatrix::Identity(3, 3)), 3);
  const ComplexMatrix r = range_basis(m);
  const ComplexMatrix c = complement_basis(m);
  EXPECT_EQ(r.cols(), 2);
  EXPECT_EQ(c.cols(), 2);
  EXPECT_LT((r.adjoint() * c).norm(), 1e-14);
}

TEST(Rank, PrincipalAngles) {
  ComplexMatrix a = ComplexMatrix::Zero(3, 1);
  ComplexMatrix b = ComplexMatrix::Zero(3, 1);
  a(0, 0) = 1;
  b(0, 0) = std::cos(0.3);
  b(1, 0) = std::sin(0.3);
  EXPECT_NEAR(max_principal_angle(a, b), 0.3, 1e-12);
  EXPECT_NEAR(max_principal_angle(a, a), 0.0, 1e-7);
}

TEST(TracePairing, MatchesTrace) {
  Rng rng(17);
  const Hermitian a = random_hermitian(rng, 4);
  const Hermitian b = random_hermitian(rng, 4);
  EXPECT_NEAR(trace_pairing(a, b), (a.matrix() * b.matrix()).trace().real(), 1e-12);
}
