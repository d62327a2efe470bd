#include <doctest.h>

#include <random>

#include "dflow/dense.hpp"
#include "dflow/errors.hpp"
#include "dflow/sparse.hpp"
#include "dflow/vector.hpp"
#include "oracles.hpp"

using namespace dflow;

namespace {

SparseMatrix dense2(double a, double b, double c, double d) {
  return SparseMatrix::from_dense(DenseMatrix(2, 2, {a, b, c, d}));
}

}  // namespace

TEST_CASE("spmv examples") {
  const Vector x{1, 2, 3};
  CHECK(spmv(SparseMatrix::identity(3), x) == x);
  CHECK(spmv(SparseMatrix::zero(2, 2), Vector{5, 7}) == Vector{0, 0});
  CHECK(spmv(dense2(2, 0, 1, 3), Vector{1, 1}) == Vector{2, 4});
  CHECK_THROWS_AS(spmv(SparseMatrix::identity(3), Vector{1, 2}), ShapeError);
}

TEST_CASE("diag_inverse") {
  CHECK(diag_inverse(SparseMatrix::diagonal(Vector{2, 4})) == Vector{0.5, 0.25});
  CHECK(diag_inverse(SparseMatrix::identity(5)) == Vector(5, 1.0));
  const auto a = dense2(1, 2, 3, 0);
  try {
    diag_inverse(a);
    FAIL("expected SingularDiagonalError");
  } catch (const SingularDiagonalError& e) {
    CHECK(e.row() == 1);
  }
  CHECK_THROWS_AS(diag_inverse(SparseMatrix::zero(2, 3)), ShapeError);
}

TEST_CASE("scaled_triple_product") {
  const auto eye = SparseMatrix::identity(3);
  CHECK(scaled_triple_product(eye, Vector(3, 1.0), eye).to_dense().values().size() == 9);
  CHECK(oracle::rel_max_diff(oracle::to_eigen(scaled_triple_product(eye, Vector(3, 1.0), eye)),
                             Eigen::MatrixXd::Identity(3, 3)) == 0.0);

  const auto row = SparseMatrix::from_dense(DenseMatrix(1, 2, {1, 1}));
  const auto p = scaled_triple_product(row, Vector{1, 1}, row);
  CHECK(p.rows() == 1);
  CHECK(p.coeff(0, 0) == 2.0);

  CHECK_THROWS_AS(scaled_triple_product(row, Vector{1, 1, 1}, row), ShapeError);
  CHECK_THROWS_AS(scaled_triple_product(row, Vector{1, 1}, eye), ShapeError);
}

TEST_CASE("dense_lu_solve examples") {
  CHECK(dense_lu_solve(DenseMatrix::identity(3), Vector{1, 2, 3}) == Vector{1, 2, 3});
  CHECK(dense_lu_solve(DenseMatrix(2, 2, {0, 1, 1, 0}), Vector{3, 4}) == Vector{4, 3});
  CHECK_THROWS_AS(dense_lu_solve(DenseMatrix(2, 2, {1, 2, 1, 2}), Vector{1, 1}), SingularMatrixError);
  CHECK_THROWS_AS(dense_lu_solve(DenseMatrix(2, 3), Vector{1, 1}), ShapeError);
}

TEST_CASE("blas-1 examples") {
  CHECK(dot(Vector{1, 2}, Vector{3, 4}) == 11.0);
  CHECK(norm2(Vector{3, 4}) == 5.0);
  Vector y{0, 1};
  axpy(2.0, Vector{1, 1}, y);
  CHECK(y == Vector{2, 3});
  CHECK_THROWS_AS(dot(Vector{1}, Vector{1, 2}), ShapeError);
  CHECK_THROWS_AS(axpy(1.0, Vector{1}, y), ShapeError);
}

TEST_CASE("CSR invariants") {
  SUBCASE("duplicates are summed, columns sorted") {
    const std::vector<Triplet> t{{0, 2, 1.0}, {0, 0, 2.0}, {0, 2, 3.0}, {1, 1, 0.0}};
    const auto a = SparseMatrix::from_triplets(2, 3, t);
    CHECK(a.nnz() == 3);
    CHECK(a.coeff(0, 2) == 4.0);
    CHECK(a.row_columns(0)[0] == 0);
    CHECK(a.row_columns(0)[1] == 2);
    CHECK(a.coeff(1, 1) == 0.0);  // explicit zero kept
  }
  SUBCASE("bad input") {
    const std::vector<Triplet> t{{2, 0, 1.0}};
    CHECK_THROWS_AS(SparseMatrix::from_triplets(2, 2, t), IndexError);
    CHECK_THROWS(SparseMatrix(2, 2, {0, 1, 1}, {1}, {1.0, 2.0}));
    CHECK_THROWS(SparseMatrix(1, 3, {0, 2}, {2, 1}, {1.0, 2.0}));
    CHECK_THROWS(SparseMatrix(1, 3, {0, 2}, {1, 1}, {1.0, 2.0}));
  }
}

TEST_CASE("MonolithicVector partitions") {
  MonolithicVector v(3, 2, 1, Vector{1, 2, 3, 4, 5, 6});
  CHECK(v.u().size() == 3);
  CHECK(v.p()[0] == 4.0);
  CHECK(v.lambda()[0] == 6.0);
  v.lambda()[0] = 9.0;
  CHECK(v.all()[5] == 9.0);
  CHECK_THROWS_AS(MonolithicVector(3, 2, 1, Vector(5)), ShapeError);
}

TEST_CASE("property: spmv matches a dense product on random matrices") {
  std::mt19937 rng(11);
  std::uniform_int_distribution<Index> size(1, 200);
  for (int trial = 0; trial < 40; ++trial) {
    const Index r = size(rng), c = size(rng);
    const auto a = oracle::random_sparse(rng, r, c, 0.1);
    const auto x = oracle::random_vector(rng, c);
    const Eigen::VectorXd ref = oracle::to_eigen(a) * oracle::to_eigen(x);
    CHECK(oracle::rel_diff(spmv(a, x), oracle::from_eigen(ref)) <= 1e-13);
  }
}

TEST_CASE("property: products, sums, transposes and blocks match dense algebra") {
  std::mt19937 rng(12);
  std::uniform_int_distribution<Index> size(1, 40);
  for (int trial = 0; trial < 30; ++trial) {
    const Index r = size(rng), k = size(rng), c = size(rng);
    const auto a = oracle::random_sparse(rng, r, k, 0.2);
    const auto b = oracle::random_sparse(rng, k, c, 0.2);
    const auto a2 = oracle::random_sparse(rng, r, k, 0.2);
    const auto ea = oracle::to_eigen(a), eb = oracle::to_eigen(b), ea2 = oracle::to_eigen(a2);
    CHECK(oracle::rel_max_diff(oracle::to_eigen(multiply(a, b)), ea * eb) <= 1e-14);
    CHECK(oracle::rel_max_diff(oracle::to_eigen(add(2.0, a, -0.5, a2)), 2.0 * ea - 0.5 * ea2) <= 1e-15);
    CHECK(oracle::rel_max_diff(oracle::to_eigen(a.transpose()), ea.transpose()) == 0.0);

    const Vector dl = oracle::random_vector(rng, r), dr = oracle::random_vector(rng, k);
    const Eigen::MatrixXd scaled = oracle::to_eigen(dl).asDiagonal() * ea * oracle::to_eigen(dr).asDiagonal();
    CHECK(oracle::rel_max_diff(oracle::to_eigen(scale(a, dl, dr)), scaled) <= 1e-15);
    CHECK(oracle::rel_max_diff(oracle::to_eigen(scale(a, {}, dr)), ea * oracle::to_eigen(dr).asDiagonal()) <= 1e-15);

    const std::vector<std::vector<const SparseMatrix*>> blocks{{&a, nullptr}, {nullptr, &b}};
    const Index rs[2] = {r, k}, cs[2] = {k, c};
    const auto big = block_matrix(blocks, rs, cs);
    CHECK(big.rows() == r + k);
    CHECK(oracle::rel_max_diff(oracle::to_eigen(extract_block(big, r, k, k, c)), eb) == 0.0);
    CHECK(extract_block(big, 0, k, r, c).max_abs() == 0.0);

    const std::vector<Index> rows{0}, cols{static_cast<Index>(k - 1), 0};
    const auto sub = submatrix(a, rows, cols);
    CHECK(sub.coeff(0, 0) == a.coeff(0, k - 1));
    CHECK(sub.coeff(0, 1) == a.coeff(0, 0));
  }
}

TEST_CASE("property: X diag(d) X^T is symmetric for positive d") {
  std::mt19937 rng(13);
  std::uniform_real_distribution<double> pos(0.1, 10.0);
  for (int trial = 0; trial < 30; ++trial) {
    const Index r = 1 + trial % 25, c = 1 + (7 * trial) % 31;
    const auto x = oracle::random_sparse(rng, r, c, 0.3);
    Vector d(static_cast<std::size_t>(c));
    for (double& v : d) v = pos(rng);
    const auto p = oracle::to_eigen(scaled_triple_product(x, d, x));
    CHECK((p - p.transpose()).cwiseAbs().maxCoeff() <= 1e-13 * std::max(1.0, p.cwiseAbs().maxCoeff()));
    const Eigen::MatrixXd ref = oracle::to_eigen(x) * oracle::to_eigen(d).asDiagonal() * oracle::to_eigen(x).transpose();
    CHECK(oracle::rel_max_diff(p, ref) <= 1e-14);
  }
}

TEST_CASE("property: dense LU reproduces b on well-conditioned systems") {
  std::mt19937 rng(14);
  for (Index n = 1; n <= 32; ++n) {
    DenseMatrix a(n, n);
    std::uniform_real_distribution<double> val(-1.0, 1.0);
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < n; ++j) a(i, j) = val(rng);
      a(i, i) += n;
    }
    const auto b = oracle::random_vector(rng, n);
    const Vector x = dense_lu_solve(a, b);
    CHECK(oracle::rel_diff(a.multiply(x), b) <= 1e-11);
  }
}
