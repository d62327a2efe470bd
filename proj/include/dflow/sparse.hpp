#ifndef DFLOW_SPARSE_HPP
#define DFLOW_SPARSE_HPP

#include <span>
#include <vector>

#include "dflow/dense.hpp"
#include "dflow/vector.hpp"

namespace dflow {

struct Triplet {
  Index row;
  Index col;
  double value;
};

/// Compressed-sparse-row matrix.
///
/// Invariants (checked on construction): row offsets are non-decreasing and
/// end at nnz, column indices are strictly increasing within a row. Entries
/// that are numerically zero are kept; nothing is ever dropped by value.
class SparseMatrix {
 public:
  SparseMatrix() = default;
  SparseMatrix(Index nrows, Index ncols, std::vector<Index> offsets, std::vector<Index> columns,
               std::vector<double> values);

  /// Duplicates are summed. Out-of-range entries raise IndexError.
  static SparseMatrix from_triplets(Index nrows, Index ncols, std::span<const Triplet> entries);
  static SparseMatrix identity(Index n, double scale = 1.0);
  static SparseMatrix diagonal(std::span<const double> d);
  static SparseMatrix zero(Index nrows, Index ncols);
  /// Stores every entry of `a`, zeros included.
  static SparseMatrix from_dense(const DenseMatrix& a);

  Index rows() const { return nrows_; }
  Index cols() const { return ncols_; }
  Index nnz() const { return static_cast<Index>(values_.size()); }
  bool is_square() const { return nrows_ == ncols_; }

  std::span<const Index> row_offsets() const { return offsets_; }
  std::span<const Index> col_indices() const { return columns_; }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  std::span<const Index> row_columns(Index i) const {
    return {columns_.data() + offsets_[i], static_cast<std::size_t>(offsets_[i + 1] - offsets_[i])};
  }
  std::span<const double> row_values(Index i) const {
    return {values_.data() + offsets_[i], static_cast<std::size_t>(offsets_[i + 1] - offsets_[i])};
  }

  /// Value at (i, j); zero when not stored.
  double coeff(Index i, Index j) const;

  /// y = A x
  void multiply(std::span<const double> x, std::span<double> y) const;
  /// y += alpha A x
  void multiply_add(double alpha, std::span<const double> x, std::span<double> y) const;

  SparseMatrix transpose() const;
  Vector diagonal() const;
  DenseMatrix to_dense() const;
  double max_abs() const;

 private:
  Index nrows_ = 0;
  Index ncols_ = 0;
  std::vector<Index> offsets_{0};
  std::vector<Index> columns_;
  std::vector<double> values_;
};

/// y = A x
Vector spmv(const SparseMatrix& a, std::span<const double> x);

/// Entrywise reciprocal of the diagonal; SingularDiagonalError names the
/// first row with |A[i,i]| < tol.
Vector diag_inverse(const SparseMatrix& a, double tol = 1e-300);

/// A * B with a symbolic pass followed by a numeric pass.
SparseMatrix multiply(const SparseMatrix& a, const SparseMatrix& b);

/// X * diag(dinv) * Y^T.
SparseMatrix scaled_triple_product(const SparseMatrix& x, std::span<const double> dinv,
                                   const SparseMatrix& y);

/// alpha A + beta B on the union of the two patterns.
SparseMatrix add(double alpha, const SparseMatrix& a, double beta, const SparseMatrix& b);

/// diag(left) * A * diag(right); either span may be empty to skip that side.
SparseMatrix scale(const SparseMatrix& a, std::span<const double> left,
                   std::span<const double> right);

/// Rows and columns selected by index lists (in the given order).
SparseMatrix submatrix(const SparseMatrix& a, std::span<const Index> rows,
                       std::span<const Index> cols);

/// Assembles a block matrix. `blocks[r][c]` may be null for a zero block;
/// row and column sizes must be given for every block row/column.
SparseMatrix block_matrix(const std::vector<std::vector<const SparseMatrix*>>& blocks,
                          std::span<const Index> row_sizes, std::span<const Index> col_sizes);

/// The block of `a` starting at (r0, c0) with the given extent.
SparseMatrix extract_block(const SparseMatrix& a, Index r0, Index c0, Index nrows, Index ncols);

}  // namespace dflow

#endif  // DFLOW_SPARSE_HPP
