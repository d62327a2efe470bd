#include "dflow/dense.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "dflow/errors.hpp"

namespace dflow {

DenseMatrix::DenseMatrix(Index nrows, Index ncols, double fill)
    : nrows_(nrows), ncols_(ncols), values_(static_cast<std::size_t>(nrows) * ncols, fill) {
  if (nrows < 0 || ncols < 0) throw ShapeError("DenseMatrix: negative dimension");
}

DenseMatrix::DenseMatrix(Index nrows, Index ncols, std::vector<double> values)
    : nrows_(nrows), ncols_(ncols), values_(std::move(values)) {
  if (nrows < 0 || ncols < 0 ||
      values_.size() != static_cast<std::size_t>(nrows) * static_cast<std::size_t>(ncols)) {
    throw ShapeError("DenseMatrix: value count does not match " + std::to_string(nrows) + "x" +
                     std::to_string(ncols));
  }
}

DenseMatrix DenseMatrix::identity(Index n) {
  DenseMatrix a(n, n);
  for (Index i = 0; i < n; ++i) a(i, i) = 1.0;
  return a;
}

Vector DenseMatrix::multiply(std::span<const double> x) const {
  if (static_cast<Index>(x.size()) != ncols_) throw ShapeError("DenseMatrix::multiply: length mismatch");
  Vector y(static_cast<std::size_t>(nrows_), 0.0);
  for (Index i = 0; i < nrows_; ++i) {
    double s = 0.0;
    const auto r = row(i);
    for (Index j = 0; j < ncols_; ++j) s += r[j] * x[j];
    y[i] = s;
  }
  return y;
}

DenseMatrix DenseMatrix::multiply(const DenseMatrix& other) const {
  if (ncols_ != other.nrows_) throw ShapeError("DenseMatrix::multiply: inner dimension mismatch");
  DenseMatrix c(nrows_, other.ncols_);
  for (Index i = 0; i < nrows_; ++i) {
    auto ci = c.row(i);
    for (Index k = 0; k < ncols_; ++k) {
      const double a = (*this)(i, k);
      if (a == 0.0) continue;
      const auto bk = other.row(k);
      for (Index j = 0; j < other.ncols_; ++j) ci[j] += a * bk[j];
    }
  }
  return c;
}

DenseMatrix DenseMatrix::transpose() const {
  DenseMatrix t(ncols_, nrows_);
  for (Index i = 0; i < nrows_; ++i)
    for (Index j = 0; j < ncols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

double DenseMatrix::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

DenseLu::DenseLu(DenseMatrix a, double pivot_tol) : lu_(std::move(a)) {
  const Index n = lu_.rows();
  if (lu_.cols() != n) throw ShapeError("DenseLu: matrix is not square");
  perm_.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) perm_[i] = i;
  const double threshold = pivot_tol * lu_.max_abs();

  for (Index k = 0; k < n; ++k) {
    Index piv = k;
    double best = std::abs(lu_(k, k));
    for (Index i = k + 1; i < n; ++i) {
      if (std::abs(lu_(i, k)) > best) {
        best = std::abs(lu_(i, k));
        piv = i;
      }
    }
    if (!(best > threshold)) {
      throw SingularMatrixError("dense LU: pivot " + std::to_string(best) + " at column " +
                                std::to_string(k) + " below threshold");
    }
    if (piv != k) {
      std::swap_ranges(lu_.row(k).begin(), lu_.row(k).end(), lu_.row(piv).begin());
      std::swap(perm_[k], perm_[piv]);
    }
    const auto rk = lu_.row(k);
    const double inv = 1.0 / rk[k];
    for (Index i = k + 1; i < n; ++i) {
      auto ri = lu_.row(i);
      const double l = ri[k] * inv;
      ri[k] = l;
      if (l == 0.0) continue;
      for (Index j = k + 1; j < n; ++j) ri[j] -= l * rk[j];
    }
  }
}

void DenseLu::solve_in_place(std::span<double> x) const {
  const Index n = lu_.rows();
  if (static_cast<Index>(x.size()) != n) throw ShapeError("DenseLu::solve: length mismatch");
  Vector y(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) y[i] = x[perm_[i]];
  for (Index i = 0; i < n; ++i) {
    const auto ri = lu_.row(i);
    double s = y[i];
    for (Index j = 0; j < i; ++j) s -= ri[j] * y[j];
    y[i] = s;
  }
  for (Index i = n - 1; i >= 0; --i) {
    const auto ri = lu_.row(i);
    double s = y[i];
    for (Index j = i + 1; j < n; ++j) s -= ri[j] * y[j];
    y[i] = s / ri[i];
  }
  std::copy(y.begin(), y.end(), x.begin());
}

Vector DenseLu::solve(std::span<const double> b) const {
  Vector x(b.begin(), b.end());
  solve_in_place(x);
  return x;
}

Vector dense_lu_solve(const DenseMatrix& a, std::span<const double> b) {
  if (a.rows() != a.cols()) throw ShapeError("dense_lu_solve: matrix is not square");
  if (static_cast<Index>(b.size()) != a.rows()) throw ShapeError("dense_lu_solve: length mismatch");
  return DenseLu(a, 1e-14).solve(b);
}

}  // namespace dflow
