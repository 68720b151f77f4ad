#ifndef NCSCALE_GENERATORS_HPP_
#define NCSCALE_GENERATORS_HPP_

// Structured instance families. Every family with a forced nc-rank is
// certified at generation time; a failed certification is an error.

#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ncscale/cp_operator.hpp"
#include "ncscale/ncrank.hpp"
#include "ncscale/random.hpp"

namespace ncscale {

struct Instance {
  MatrixTuple tuple;
  std::string name;
  std::optional<int> known_ncrank;
  std::string construction;
};

namespace detail {

inline ComplexMatrix unit(int n, int i, int j) {
  ComplexMatrix e = ComplexMatrix::Zero(n, n);
  e(i, j) = 1.0;
  return e;
}

// Certifies the tuple and checks the result against the expected value.
inline int certify_expected(const MatrixTuple& a, int expected,
                            std::uint64_t seed, const std::string& what) {
  FlowConfig cfg;
  cfg.seed = seed;
  const RankCertificate cert = ncrank(a, cfg);
  if (!cert.certified || cert.ncrank != expected) {
    std::ostringstream os;
    os << what << ": generation-time certification failed (bounds "
       << cert.lower << ".." << cert.upper << ", expected " << expected << ")";
    throw Error(os.str());
  }
  return cert.ncrank;
}

inline void require_param(bool ok, const std::string& msg) {
  if (!ok) throw InvalidInput(msg);
}

}  // namespace detail

inline Instance make_identity(int n) {
  detail::require_param(n >= 1, "identity: n must be >= 1");
  std::ostringstream name;
  name << "identity(n=" << n << ")";
  return {MatrixTuple({ComplexMatrix::Identity(n, n)}), name.str(), n,
          "identity"};
}

// (diag(a), diag(b)) with a_i = exp(u_i), u_i uniform in [-1, 1], and b
// complex Gaussian. The first matrix is invertible, so the nc-rank is n.
inline Instance make_diagonal_pair(int n, std::uint64_t seed) {
  detail::require_param(n >= 1, "diagonal-pair: n must be >= 1");
  Rng rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  ComplexMatrix a = ComplexMatrix::Zero(n, n);
  ComplexMatrix b = ComplexMatrix::Zero(n, n);
  for (int i = 0; i < n; ++i) a(i, i) = std::exp(uni(rng));
  for (int i = 0; i < n; ++i) b(i, i) = complex_gaussian(rng);
  std::ostringstream name;
  name << "diagonal-pair(n=" << n << ",seed=" << seed << ")";
  return {MatrixTuple({a, b}), name.str(), n, "diagonal-pair"};
}

// Matrices vanishing on the upper-left (n - l) x k block, complex Gaussian
// elsewhere. U = span(e_1..e_k) maps into span(e_{n-l+1}..e_n), so the
// corank is at least k - l, and equal to it for generic entries.
inline Instance make_zero_block(int n, int k, int l, int m,
                                std::uint64_t seed) {
  detail::require_param(n >= 1 && m >= 1, "zero-block: need n, m >= 1");
  detail::require_param(k >= 1 && k <= n, "zero-block: need 1 <= k <= n");
  detail::require_param(l >= 0 && l < k, "zero-block: need 0 <= l < k");
  Rng rng(seed);
  std::vector<ComplexMatrix> mats;
  for (int s = 0; s < m; ++s) {
    ComplexMatrix a = random_gaussian(rng, n, n);
    a.topLeftCorner(n - l, k).setZero();
    mats.push_back(a);
  }
  MatrixTuple tuple(std::move(mats));
  std::ostringstream name;
  name << "zero-block(n=" << n << ",k=" << k << ",l=" << l << ",m=" << m
       << ",seed=" << seed << ")";
  const int expected = n - (k - l);
  const int rank = detail::certify_expected(tuple, expected, seed, name.str());
  return {std::move(tuple), name.str(), rank, "zero-block"};
}

// A_1 = E12 - E21, A_2 = E13 - E31, A_3 = E23 - E32.
inline Instance make_skew3() {
  using detail::unit;
  MatrixTuple tuple({unit(3, 0, 1) - unit(3, 1, 0),
                     unit(3, 0, 2) - unit(3, 2, 0),
                     unit(3, 1, 2) - unit(3, 2, 1)});
  const int rank = detail::certify_expected(tuple, 3, 0, "skew3");
  return {std::move(tuple), "skew3", rank, "skew3"};
}

// m complex Gaussian n x n matrices; known_ncrank is set when certified.
inline Instance make_random_full(int n, int m, std::uint64_t seed) {
  detail::require_param(n >= 1 && m >= 1, "random-full: need n, m >= 1");
  Rng rng(seed);
  std::vector<ComplexMatrix> mats;
  for (int s = 0; s < m; ++s) mats.push_back(random_gaussian(rng, n, n));
  MatrixTuple tuple(std::move(mats));
  std::ostringstream name;
  name << "random-full(n=" << n << ",m=" << m << ",seed=" << seed << ")";
  FlowConfig cfg;
  cfg.seed = seed;
  const RankCertificate cert = ncrank(tuple, cfg);
  std::optional<int> known;
  if (cert.certified) known = cert.ncrank;
  return {std::move(tuple), name.str(), known, "random-full"};
}

// (E11) in dimension 2: support-deficient on both sides, corank 1.
inline Instance make_e1() {
  return {MatrixTuple({detail::unit(2, 0, 0)}), "e1", 1, "e1"};
}

// Fixed 3 x 3 pair whose unique shrunk subspace is span(e_1, e_2).
inline Instance make_e4() {
  const Complex i(0.0, 1.0);
  ComplexMatrix a1(3, 3), a2(3, 3);
  a1 << 0, 0, 1, 0, 0, i, 1, 2, -1;
  a2 << 0, 0, 2, 0, 0, -1, i, 1, 1;
  MatrixTuple tuple({a1, a2});
  const int rank = detail::certify_expected(tuple, 2, 0, "e4");
  return {std::move(tuple), "e4", rank, "e4"};
}

struct GeneratorParams {
  int n = 3;
  int m = 2;
  int k = 2;
  int l = 1;
  std::uint64_t seed = 0;
};

inline const std::vector<std::string>& generator_families() {
  static const std::vector<std::string> names = {
      "identity", "diagonal-pair", "zero-block", "skew3",
      "random-full", "e1", "e4"};
  return names;
}

inline Instance generate(const std::string& family, const GeneratorParams& p) {
  if (family == "identity") return make_identity(p.n);
  if (family == "diagonal-pair") return make_diagonal_pair(p.n, p.seed);
  if (family == "zero-block") return make_zero_block(p.n, p.k, p.l, p.m, p.seed);
  if (family == "skew3") return make_skew3();
  if (family == "random-full") return make_random_full(p.n, p.m, p.seed);
  if (family == "e1") return make_e1();
  if (family == "e4") return make_e4();
  throw InvalidInput("generate: unknown family '" + family + "'");
}

}  // namespace ncscale

#endif  // NCSCALE_GENERATORS_HPP_
