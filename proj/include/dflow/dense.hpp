#ifndef DFLOW_DENSE_HPP
#define DFLOW_DENSE_HPP

#include <span>
#include <vector>

#include "dflow/vector.hpp"

namespace dflow {

/// Row-major dense matrix. Used for the small multiplier blocks and as a
/// test oracle for sparse results.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(Index nrows, Index ncols, double fill = 0.0);
  DenseMatrix(Index nrows, Index ncols, std::vector<double> values);

  static DenseMatrix identity(Index n);

  Index rows() const { return nrows_; }
  Index cols() const { return ncols_; }
  double& operator()(Index i, Index j) { return values_[static_cast<std::size_t>(i) * ncols_ + j]; }
  double operator()(Index i, Index j) const {
    return values_[static_cast<std::size_t>(i) * ncols_ + j];
  }
  std::span<const double> values() const { return values_; }
  std::span<double> row(Index i) {
    return {values_.data() + static_cast<std::size_t>(i) * ncols_, static_cast<std::size_t>(ncols_)};
  }
  std::span<const double> row(Index i) const {
    return {values_.data() + static_cast<std::size_t>(i) * ncols_, static_cast<std::size_t>(ncols_)};
  }

  /// y = A x
  Vector multiply(std::span<const double> x) const;
  DenseMatrix multiply(const DenseMatrix& other) const;
  DenseMatrix transpose() const;
  double max_abs() const;

 private:
  Index nrows_ = 0;
  Index ncols_ = 0;
  std::vector<double> values_;
};

/// LU factorization with partial pivoting.
///
/// Throws SingularMatrixError when a pivot falls below
/// `pivot_tol * max|A|`.
class DenseLu {
 public:
  DenseLu() = default;
  explicit DenseLu(DenseMatrix a, double pivot_tol = 1e-14);

  Index size() const { return lu_.rows(); }
  Vector solve(std::span<const double> b) const;
  void solve_in_place(std::span<double> x) const;

 private:
  DenseMatrix lu_;
  std::vector<Index> perm_;
};

/// Solves A x = b for a small square A (partial pivoting).
Vector dense_lu_solve(const DenseMatrix& a, std::span<const double> b);

}  // namespace dflow

#endif  // DFLOW_DENSE_HPP
