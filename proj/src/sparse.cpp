#include "dflow/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>

#include "dflow/errors.hpp"

namespace dflow {

namespace {

std::string dims(Index r, Index c) { return std::to_string(r) + "x" + std::to_string(c); }

}  // namespace

SparseMatrix::SparseMatrix(Index nrows, Index ncols, std::vector<Index> offsets,
                           std::vector<Index> columns, std::vector<double> values)
    : nrows_(nrows),
      ncols_(ncols),
      offsets_(std::move(offsets)),
      columns_(std::move(columns)),
      values_(std::move(values)) {
  if (nrows < 0 || ncols < 0) throw ShapeError("SparseMatrix: negative dimension");
  if (offsets_.size() != static_cast<std::size_t>(nrows) + 1 || offsets_.front() != 0 ||
      offsets_.back() != static_cast<Index>(columns_.size()) || columns_.size() != values_.size()) {
    throw ShapeError("SparseMatrix: inconsistent CSR arrays");
  }
  for (Index i = 0; i < nrows_; ++i) {
    if (offsets_[i + 1] < offsets_[i]) throw ShapeError("SparseMatrix: offsets decrease");
    for (Index k = offsets_[i]; k < offsets_[i + 1]; ++k) {
      if (columns_[k] < 0 || columns_[k] >= ncols_) throw IndexError("SparseMatrix: column out of range");
      if (k > offsets_[i] && columns_[k] <= columns_[k - 1]) {
        throw ShapeError("SparseMatrix: columns not strictly increasing in row " + std::to_string(i));
      }
    }
  }
}

SparseMatrix SparseMatrix::from_triplets(Index nrows, Index ncols, std::span<const Triplet> entries) {
  std::vector<Index> count(static_cast<std::size_t>(nrows) + 1, 0);
  for (const auto& t : entries) {
    if (t.row < 0 || t.row >= nrows || t.col < 0 || t.col >= ncols) {
      throw IndexError("from_triplets: entry (" + std::to_string(t.row) + "," + std::to_string(t.col) +
                       ") outside " + dims(nrows, ncols));
    }
    ++count[t.row + 1];
  }
  std::partial_sum(count.begin(), count.end(), count.begin());
  std::vector<Index> cols(entries.size());
  std::vector<double> vals(entries.size());
  std::vector<Index> next(count.begin(), count.end() - 1);
  for (const auto& t : entries) {
    const Index k = next[t.row]++;
    cols[k] = t.col;
    vals[k] = t.value;
  }
  // sort each row and merge duplicates
  std::vector<Index> offsets(static_cast<std::size_t>(nrows) + 1, 0);
  std::vector<Index> out_cols;
  std::vector<double> out_vals;
  out_cols.reserve(entries.size());
  out_vals.reserve(entries.size());
  std::vector<Index> order;
  for (Index i = 0; i < nrows; ++i) {
    const Index b = count[i];
    const Index e = count[i + 1];
    order.resize(static_cast<std::size_t>(e - b));
    std::iota(order.begin(), order.end(), b);
    std::stable_sort(order.begin(), order.end(), [&](Index p, Index q) { return cols[p] < cols[q]; });
    for (Index k : order) {
      if (static_cast<Index>(out_cols.size()) > offsets[i] && out_cols.back() == cols[k]) {
        out_vals.back() += vals[k];
      } else {
        out_cols.push_back(cols[k]);
        out_vals.push_back(vals[k]);
      }
    }
    offsets[i + 1] = static_cast<Index>(out_cols.size());
  }
  return SparseMatrix(nrows, ncols, std::move(offsets), std::move(out_cols), std::move(out_vals));
}

SparseMatrix SparseMatrix::identity(Index n, double scale) {
  std::vector<Index> offsets(static_cast<std::size_t>(n) + 1);
  std::iota(offsets.begin(), offsets.end(), 0);
  std::vector<Index> cols(static_cast<std::size_t>(n));
  std::iota(cols.begin(), cols.end(), 0);
  return SparseMatrix(n, n, std::move(offsets), std::move(cols),
                      std::vector<double>(static_cast<std::size_t>(n), scale));
}

SparseMatrix SparseMatrix::diagonal(std::span<const double> d) {
  SparseMatrix a = identity(static_cast<Index>(d.size()));
  std::copy(d.begin(), d.end(), a.values_.begin());
  return a;
}

SparseMatrix SparseMatrix::zero(Index nrows, Index ncols) {
  return SparseMatrix(nrows, ncols, std::vector<Index>(static_cast<std::size_t>(nrows) + 1, 0), {}, {});
}

SparseMatrix SparseMatrix::from_dense(const DenseMatrix& a) {
  std::vector<Index> offsets(static_cast<std::size_t>(a.rows()) + 1);
  std::vector<Index> cols;
  std::vector<double> vals(a.values().begin(), a.values().end());
  cols.reserve(vals.size());
  for (Index i = 0; i < a.rows(); ++i) {
    offsets[i] = i * a.cols();
    for (Index j = 0; j < a.cols(); ++j) cols.push_back(j);
  }
  offsets[a.rows()] = a.rows() * a.cols();
  return SparseMatrix(a.rows(), a.cols(), std::move(offsets), std::move(cols), std::move(vals));
}

double SparseMatrix::coeff(Index i, Index j) const {
  if (i < 0 || i >= nrows_ || j < 0 || j >= ncols_) throw IndexError("coeff: index out of range");
  const auto c = row_columns(i);
  const auto it = std::lower_bound(c.begin(), c.end(), j);
  if (it == c.end() || *it != j) return 0.0;
  return values_[offsets_[i] + (it - c.begin())];
}

void SparseMatrix::multiply(std::span<const double> x, std::span<double> y) const {
  if (static_cast<Index>(x.size()) != ncols_ || static_cast<Index>(y.size()) != nrows_) {
    throw ShapeError("spmv: " + dims(nrows_, ncols_) + " matrix with vector of length " +
                     std::to_string(x.size()));
  }
  for (Index i = 0; i < nrows_; ++i) {
    double s = 0.0;
    for (Index k = offsets_[i]; k < offsets_[i + 1]; ++k) s += values_[k] * x[columns_[k]];
    y[i] = s;
  }
}

void SparseMatrix::multiply_add(double alpha, std::span<const double> x, std::span<double> y) const {
  if (static_cast<Index>(x.size()) != ncols_ || static_cast<Index>(y.size()) != nrows_) {
    throw ShapeError("spmv: " + dims(nrows_, ncols_) + " matrix with vector of length " +
                     std::to_string(x.size()));
  }
  for (Index i = 0; i < nrows_; ++i) {
    double s = 0.0;
    for (Index k = offsets_[i]; k < offsets_[i + 1]; ++k) s += values_[k] * x[columns_[k]];
    y[i] += alpha * s;
  }
}

SparseMatrix SparseMatrix::transpose() const {
  std::vector<Index> offsets(static_cast<std::size_t>(ncols_) + 1, 0);
  for (Index c : columns_) ++offsets[c + 1];
  std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
  std::vector<Index> next(offsets.begin(), offsets.end() - 1);
  std::vector<Index> cols(columns_.size());
  std::vector<double> vals(values_.size());
  // rows visited in increasing order keep the transposed columns sorted
  for (Index i = 0; i < nrows_; ++i) {
    for (Index k = offsets_[i]; k < offsets_[i + 1]; ++k) {
      const Index dst = next[columns_[k]]++;
      cols[dst] = i;
      vals[dst] = values_[k];
    }
  }
  return SparseMatrix(ncols_, nrows_, std::move(offsets), std::move(cols), std::move(vals));
}

Vector SparseMatrix::diagonal() const {
  const Index n = std::min(nrows_, ncols_);
  Vector d(static_cast<std::size_t>(n), 0.0);
  for (Index i = 0; i < n; ++i) d[i] = coeff(i, i);
  return d;
}

DenseMatrix SparseMatrix::to_dense() const {
  DenseMatrix a(nrows_, ncols_);
  for (Index i = 0; i < nrows_; ++i)
    for (Index k = offsets_[i]; k < offsets_[i + 1]; ++k) a(i, columns_[k]) = values_[k];
  return a;
}

double SparseMatrix::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

Vector spmv(const SparseMatrix& a, std::span<const double> x) {
  Vector y(static_cast<std::size_t>(a.rows()), 0.0);
  a.multiply(x, y);
  return y;
}

Vector diag_inverse(const SparseMatrix& a, double tol) {
  if (!a.is_square()) throw ShapeError("diag_inverse: matrix is not square");
  Vector d = a.diagonal();
  for (Index i = 0; i < a.rows(); ++i) {
    if (!(std::abs(d[i]) >= tol) || d[i] == 0.0) throw SingularDiagonalError(i, d[i]);
    d[i] = 1.0 / d[i];
  }
  return d;
}

namespace {

// Gustavson product A * diag(mid) * B; `mid` may be empty for the plain product.
SparseMatrix gustavson(const SparseMatrix& a, std::span<const double> mid, const SparseMatrix& b) {
  const Index n = a.rows();
  const Index p = b.cols();
  std::vector<Index> marker(static_cast<std::size_t>(p), -1);

  // symbolic pass
  std::vector<Index> offsets(static_cast<std::size_t>(n) + 1, 0);
  std::vector<Index> cols;
  for (Index i = 0; i < n; ++i) {
    const Index row_start = static_cast<Index>(cols.size());
    for (Index j : a.row_columns(i)) {
      for (Index k : b.row_columns(j)) {
        if (marker[k] != i) {
          marker[k] = i;
          cols.push_back(k);
        }
      }
    }
    std::sort(cols.begin() + row_start, cols.end());
    offsets[i + 1] = static_cast<Index>(cols.size());
  }

  // numeric pass
  std::vector<double> vals(cols.size(), 0.0);
  std::vector<double> acc(static_cast<std::size_t>(p), 0.0);
  for (Index i = 0; i < n; ++i) {
    const auto ac = a.row_columns(i);
    const auto av = a.row_values(i);
    for (std::size_t q = 0; q < ac.size(); ++q) {
      const Index j = ac[q];
      const double aij = mid.empty() ? av[q] : av[q] * mid[j];
      const auto bc = b.row_columns(j);
      const auto bv = b.row_values(j);
      for (std::size_t r = 0; r < bc.size(); ++r) acc[bc[r]] += aij * bv[r];
    }
    for (Index k = offsets[i]; k < offsets[i + 1]; ++k) {
      vals[k] = acc[cols[k]];
      acc[cols[k]] = 0.0;
    }
  }
  return SparseMatrix(n, p, std::move(offsets), std::move(cols), std::move(vals));
}

}  // namespace

SparseMatrix multiply(const SparseMatrix& a, const SparseMatrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("multiply: " + dims(a.rows(), a.cols()) + " times " + dims(b.rows(), b.cols()));
  }
  return gustavson(a, {}, b);
}

SparseMatrix scaled_triple_product(const SparseMatrix& x, std::span<const double> dinv,
                                   const SparseMatrix& y) {
  if (x.cols() != y.cols() || static_cast<Index>(dinv.size()) != x.cols()) {
    throw ShapeError("scaled_triple_product: X " + dims(x.rows(), x.cols()) + ", Y " +
                     dims(y.rows(), y.cols()) + ", d of length " + std::to_string(dinv.size()));
  }
  return gustavson(x, dinv, y.transpose());
}

SparseMatrix add(double alpha, const SparseMatrix& a, double beta, const SparseMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError("add: " + dims(a.rows(), a.cols()) + " vs " + dims(b.rows(), b.cols()));
  }
  std::vector<Index> offsets(static_cast<std::size_t>(a.rows()) + 1, 0);
  std::vector<Index> cols;
  std::vector<double> vals;
  cols.reserve(static_cast<std::size_t>(a.nnz() + b.nnz()));
  vals.reserve(cols.capacity());
  for (Index i = 0; i < a.rows(); ++i) {
    const auto ac = a.row_columns(i);
    const auto av = a.row_values(i);
    const auto bc = b.row_columns(i);
    const auto bv = b.row_values(i);
    std::size_t p = 0;
    std::size_t q = 0;
    while (p < ac.size() || q < bc.size()) {
      if (q == bc.size() || (p < ac.size() && ac[p] < bc[q])) {
        cols.push_back(ac[p]);
        vals.push_back(alpha * av[p]);
        ++p;
      } else if (p == ac.size() || bc[q] < ac[p]) {
        cols.push_back(bc[q]);
        vals.push_back(beta * bv[q]);
        ++q;
      } else {
        cols.push_back(ac[p]);
        vals.push_back(alpha * av[p] + beta * bv[q]);
        ++p;
        ++q;
      }
    }
    offsets[i + 1] = static_cast<Index>(cols.size());
  }
  return SparseMatrix(a.rows(), a.cols(), std::move(offsets), std::move(cols), std::move(vals));
}

SparseMatrix scale(const SparseMatrix& a, std::span<const double> left, std::span<const double> right) {
  if ((!left.empty() && static_cast<Index>(left.size()) != a.rows()) ||
      (!right.empty() && static_cast<Index>(right.size()) != a.cols())) {
    throw ShapeError("scale: scaling vector length mismatch");
  }
  std::vector<double> vals(a.values().begin(), a.values().end());
  const auto off = a.row_offsets();
  const auto cols = a.col_indices();
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index k = off[i]; k < off[i + 1]; ++k) {
      if (!left.empty()) vals[k] *= left[i];
      if (!right.empty()) vals[k] *= right[cols[k]];
    }
  }
  return SparseMatrix(a.rows(), a.cols(), std::vector<Index>(off.begin(), off.end()),
                      std::vector<Index>(cols.begin(), cols.end()), std::move(vals));
}

SparseMatrix submatrix(const SparseMatrix& a, std::span<const Index> rows, std::span<const Index> cols) {
  std::vector<Index> col_map(static_cast<std::size_t>(a.cols()), -1);
  for (std::size_t c = 0; c < cols.size(); ++c) {
    if (cols[c] < 0 || cols[c] >= a.cols()) throw IndexError("submatrix: column index out of range");
    col_map[cols[c]] = static_cast<Index>(c);
  }
  std::vector<Triplet> entries;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] < 0 || rows[r] >= a.rows()) throw IndexError("submatrix: row index out of range");
    const auto rc = a.row_columns(rows[r]);
    const auto rv = a.row_values(rows[r]);
    for (std::size_t k = 0; k < rc.size(); ++k) {
      const Index c = col_map[rc[k]];
      if (c >= 0) entries.push_back({static_cast<Index>(r), c, rv[k]});
    }
  }
  return SparseMatrix::from_triplets(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()),
                                     entries);
}

SparseMatrix block_matrix(const std::vector<std::vector<const SparseMatrix*>>& blocks,
                          std::span<const Index> row_sizes, std::span<const Index> col_sizes) {
  if (blocks.size() != row_sizes.size()) throw ShapeError("block_matrix: block row count mismatch");
  std::vector<Index> row_start(row_sizes.size() + 1, 0);
  std::vector<Index> col_start(col_sizes.size() + 1, 0);
  std::partial_sum(row_sizes.begin(), row_sizes.end(), row_start.begin() + 1);
  std::partial_sum(col_sizes.begin(), col_sizes.end(), col_start.begin() + 1);

  std::vector<Triplet> entries;
  for (std::size_t br = 0; br < blocks.size(); ++br) {
    if (blocks[br].size() != col_sizes.size()) throw ShapeError("block_matrix: block column count mismatch");
    for (std::size_t bc = 0; bc < col_sizes.size(); ++bc) {
      const SparseMatrix* blk = blocks[br][bc];
      if (blk == nullptr) continue;
      if (blk->rows() != row_sizes[br] || blk->cols() != col_sizes[bc]) {
        throw ShapeError("block_matrix: block (" + std::to_string(br) + "," + std::to_string(bc) +
                         ") is " + dims(blk->rows(), blk->cols()) + ", expected " +
                         dims(row_sizes[br], col_sizes[bc]));
      }
      for (Index i = 0; i < blk->rows(); ++i) {
        const auto c = blk->row_columns(i);
        const auto v = blk->row_values(i);
        for (std::size_t k = 0; k < c.size(); ++k) {
          entries.push_back({row_start[br] + i, col_start[bc] + c[k], v[k]});
        }
      }
    }
  }
  return SparseMatrix::from_triplets(row_start.back(), col_start.back(), entries);
}

SparseMatrix extract_block(const SparseMatrix& a, Index r0, Index c0, Index nrows, Index ncols) {
  if (r0 < 0 || c0 < 0 || r0 + nrows > a.rows() || c0 + ncols > a.cols()) {
    throw IndexError("extract_block: block outside matrix");
  }
  std::vector<Index> rows(static_cast<std::size_t>(nrows));
  std::vector<Index> cols(static_cast<std::size_t>(ncols));
  std::iota(rows.begin(), rows.end(), r0);
  std::iota(cols.begin(), cols.end(), c0);
  return submatrix(a, rows, cols);
}

}  // namespace dflow
