#ifndef NCSCALE_RANDOM_HPP_
#define NCSCALE_RANDOM_HPP_

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>

#include "ncscale/linalg.hpp"

namespace ncscale {

using Rng = std::mt19937_64;

// Standard complex Gaussian: real and imaginary parts N(0, 1/2).
inline Complex complex_gaussian(Rng& rng) {
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  const double re = normal(rng);
  const double im = normal(rng);
  return {re, im};
}

inline ComplexMatrix random_gaussian(Rng& rng, int rows, int cols) {
  ComplexMatrix m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = complex_gaussian(rng);
  return m;
}

// Haar-distributed unitary from the QR decomposition of a Gaussian matrix.
inline ComplexMatrix random_unitary(Rng& rng, int n) {
  Eigen::HouseholderQR<ComplexMatrix> qr(random_gaussian(rng, n, n));
  ComplexMatrix q = qr.householderQ();
  const ComplexMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < n; ++j) {
    const double mag = std::abs(r(j, j));
    if (mag > 0) q.col(j) *= r(j, j) / mag;
  }
  return q;
}

inline Hermitian random_hermitian(Rng& rng, int n, double scale = 1.0) {
  const ComplexMatrix g = random_gaussian(rng, n, n);
  return Hermitian::symmetrized(scale * 0.5 * (g + g.adjoint()));
}

// w diag(exp(s)) w^dagger with log-eigenvalues s uniform in [-spread, spread].
inline Hermitian random_pd(Rng& rng, int n, double spread = 1.0) {
  std::uniform_real_distribution<double> uni(-spread, spread);
  RealVector s(n);
  for (int i = 0; i < n; ++i) s(i) = std::exp(uni(rng));
  const ComplexMatrix w = random_unitary(rng, n);
  return Hermitian::symmetrized(w * s.cast<Complex>().asDiagonal() * w.adjoint());
}

// Well conditioned invertible matrix: unitary * diag(exp(s)) * unitary.
inline ComplexMatrix random_gl(Rng& rng, int n, double spread = 1.0) {
  std::uniform_real_distribution<double> uni(-spread, spread);
  RealVector s(n);
  for (int i = 0; i < n; ++i) s(i) = std::exp(uni(rng));
  return random_unitary(rng, n) * s.cast<Complex>().asDiagonal() *
         random_unitary(rng, n);
}

}  // namespace ncscale

#endif  // NCSCALE_RANDOM_HPP_
