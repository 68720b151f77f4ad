#ifndef NCSCALE_ERRORS_HPP_
#define NCSCALE_ERRORS_HPP_

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <utility>

namespace ncscale {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input: non-finite entries, wrong shapes, non-Hermitian data.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

// A matrix that should be positive definite is not, or is so close to the
// boundary of the cone that the requested operation would lose all digits.
class DomainError : public Error {
 public:
  DomainError(const std::string& what, double smallest_eigenvalue,
              double ratio = 0.0)
      : Error(what), smallest_eigenvalue_(smallest_eigenvalue), ratio_(ratio) {}

  double smallest_eigenvalue() const { return smallest_eigenvalue_; }
  // lambda_min / lambda_max (or 1/condition number) at the failure point.
  double boundary_ratio() const { return ratio_; }

 private:
  double smallest_eigenvalue_;
  double ratio_;
};

// The tuple does not satisfy A C^n = C^n; reduce_tuple must be applied first.
class NotFullSupport : public Error {
 public:
  NotFullSupport(const std::string& what, int left_rank, int right_rank)
      : Error(what), left_rank_(left_rank), right_rank_(right_rank) {}
  int left_rank() const { return left_rank_; }
  int right_rank() const { return right_rank_; }

 private:
  int left_rank_;
  int right_rank_;
};

class InvalidScaling : public Error {
 public:
  using Error::Error;
};

// Sinkhorn could not normalize a marginal: it is singular. The defect basis
// spans the (numerical) kernel of the offending marginal.
class StallError : public Error {
 public:
  StallError(const std::string& what, Eigen::MatrixXcd defect, bool left_side)
      : Error(what), defect_(std::move(defect)), left_side_(left_side) {}
  const Eigen::MatrixXcd& defect_basis() const { return defect_; }
  bool left_side() const { return left_side_; }

 private:
  Eigen::MatrixXcd defect_;
  bool left_side_;
};

// reduce_tuple was called on a tuple with full support on both sides.
class NoReductionNeeded : public Error {
 public:
  using Error::Error;
};

}  // namespace ncscale

#endif  // NCSCALE_ERRORS_HPP_
