#include <doctest.h>

#include <random>

#include "dflow/errors.hpp"
#include "dflow/krylov.hpp"
#include "dflow/precond.hpp"
#include "oracles.hpp"

using namespace dflow;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

Vector apply_state(const PreconditionerState& st, const Vector& r) {
  Vector z(r.size(), -3.0);
  apply_preconditioner(st, r, z);
  return z;
}

// Dense blocks of a system, for the oracles below.
struct Dense {
  MatrixXd K, B, Bt, S, Phi;
  explicit Dense(const BlockSystem& s)
      : K(oracle::to_eigen(s.K)), B(oracle::to_eigen(s.B)), Bt(oracle::to_eigen(s.Bt)), S(oracle::to_eigen(s.S)),
        Phi(oracle::to_eigen(s.Phi)) {}
};

// Explicit P_S^aug built from dense blocks.
MatrixXd dense_aug_simple(const BlockSystem& s) {
  const Dense d(s);
  const VectorXd dinv = d.K.diagonal().cwiseInverse();
  const MatrixXd Dinv = dinv.asDiagonal();
  const MatrixXd sigma = d.B * Dinv * d.Bt + d.S;
  const MatrixXd Winv = sigma.diagonal().cwiseInverse().asDiagonal();
  const MatrixXd spl = d.B * Dinv * d.Phi.transpose();
  const Index nu = s.nu(), np = s.np(), m = s.m();
  MatrixXd p = MatrixXd::Zero(s.size(), s.size());
  p.block(0, 0, nu, nu) = d.K;
  p.block(0, nu, nu, np) = d.K * Dinv * d.Bt;
  p.block(0, nu + np, nu, m) = d.K * Dinv * d.Phi.transpose();
  p.block(nu, 0, np, nu) = -d.B;
  p.block(nu, nu, np, np) = d.S;
  p.block(nu, nu + np, np, m) = -(MatrixXd::Identity(np, np) - sigma * Winv) * spl;
  p.block(nu + np, 0, m, nu) = d.Phi;
  return p;
}

// Columns of the preconditioner inverse, one application per unit vector.
MatrixXd inverse_by_columns(const PreconditionerState& st) {
  const Index n = st.size();
  MatrixXd z(n, n);
  for (Index j = 0; j < n; ++j) {
    Vector e(static_cast<std::size_t>(n), 0.0);
    e[j] = 1.0;
    z.col(j) = oracle::to_eigen(apply_state(st, e));
  }
  return z;
}

BlockSystem small_system(std::mt19937& rng, Index m) { return oracle::random_block_system(rng, 30, 12, m); }

}  // namespace

TEST_CASE("preconditioner names") {
  for (const char* n : {"simple", "aug-as", "aug-as-i", "exact-lu"}) CHECK(to_string(parse_precond_kind(n)) == n);
  CHECK_THROWS_AS(parse_precond_kind("amg"), ConfigError);
}

TEST_CASE("SIMPLE special cases") {
  std::mt19937 rng(21);
  SUBCASE("K diagonal and S = 0: Sigma = B K^-1 B^T and the preconditioner is exact") {
    Vector kd(20);
    for (double& v : kd) v = 2.0 + std::uniform_real_distribution<double>(0, 1)(rng);
    auto B = oracle::random_sparse(rng, 6, 20, 0.4);
    const auto sys = make_block_system(SparseMatrix::diagonal(kd), B, SparseMatrix::zero(6, 6),
                                       SparseMatrix::zero(0, 20), oracle::random_vector(rng, 20),
                                       oracle::random_vector(rng, 6), {});
    const auto st = build_simple(sys);
    const Dense d(sys);
    const MatrixXd ref = d.B * d.K.inverse() * d.Bt;
    CHECK(oracle::rel_max_diff(oracle::to_eigen(st.sigma), ref) <= 1e-14);
    const Vector b = sys.rhs();
    const Vector x = apply_state(st, b);
    CHECK(oracle::rel_diff(x, oracle::dense_solve(oracle::to_eigen(sys.assembled()), b)) <= 1e-10);
  }
  SUBCASE("B = 0 and S = I give Sigma = I") {
    const auto sys = make_block_system(SparseMatrix::identity(5, 3.0), SparseMatrix::zero(4, 5),
                                       SparseMatrix::identity(4), SparseMatrix::zero(0, 5), Vector(5, 1.0),
                                       Vector(4, 1.0), {});
    const auto st = build_simple(sys);
    CHECK(oracle::rel_max_diff(oracle::to_eigen(st.sigma), MatrixXd::Identity(4, 4)) == 0.0);
  }
  SUBCASE("zero diagonal in K") {
    auto sys = small_system(rng, 1);
    sys.K = add(1.0, sys.K, -1.0, SparseMatrix::diagonal(sys.K.diagonal()));
    CHECK_THROWS_AS(build_simple(sys), SingularDiagonalError);
  }
}

TEST_CASE("SIMPLE application") {
  std::mt19937 rng(22);
  const auto sys = small_system(rng, 2);
  const auto st = build_simple(sys);
  CHECK(apply_state(st, Vector(static_cast<std::size_t>(sys.size()), 0.0)) ==
        Vector(static_cast<std::size_t>(sys.size()), 0.0));

  // P z = r against the explicit matrix
  const Vector r = oracle::random_vector(rng, sys.size());
  const Vector z = apply_state(st, r);
  const VectorXd pz = oracle::to_eigen(explicit_preconditioner(st)) * oracle::to_eigen(z);
  CHECK(oracle::rel_diff(oracle::from_eigen(pz), r) <= 1e-10);

  // multipliers pass through
  for (Index i = 0; i < sys.m(); ++i) CHECK(z[sys.nu() + sys.np() + i] == r[sys.nu() + sys.np() + i]);

  // F, 0 right-hand side against the three-step solver
  Vector fr(static_cast<std::size_t>(sys.size()), 0.0);
  std::copy(sys.F.begin(), sys.F.end(), fr.begin());
  const Vector zf = apply_state(st, fr);
  const MonolithicVector xs = simple_like_solve(st, sys.F, Vector(static_cast<std::size_t>(sys.np()), 0.0));
  const auto n = static_cast<std::size_t>(sys.nu() + sys.np());
  CHECK(oracle::rel_diff(std::span<const double>(zf).subspan(0, n), xs.all().subspan(0, n)) <= 1e-13);
}

TEST_CASE("general LU family") {
  std::mt19937 rng(23);
  auto sys = small_system(rng, 1);
  Vector md(static_cast<std::size_t>(sys.nu()));
  for (double& v : md) v = 0.5 + std::uniform_real_distribution<double>(0, 1)(rng);
  sys.M = SparseMatrix::diagonal(md);
  sys.dt = 0.01;

  SUBCASE("(diag K, diag K) is SIMPLE, bit for bit") {
    const auto a = build_simple(sys);
    const auto b = build_general_lu(sys, HKind::DiagK, HKind::DiagK);
    for (int t = 0; t < 5; ++t) {
      const Vector r = oracle::random_vector(rng, sys.size());
      CHECK(apply_state(a, r) == apply_state(b, r));
    }
  }
  SUBCASE("Chorin-Temam Schur block") {
    const auto st = build_general_lu(sys, HKind::DtMassInv, HKind::DtMassInv);
    const Dense d(sys);
    const MatrixXd hm = (0.01 * oracle::to_eigen(md).cwiseInverse()).asDiagonal();
    CHECK(oracle::rel_max_diff(oracle::to_eigen(st.sigma), d.B * hm * d.Bt + d.S) <= 1e-14);
    const double diff = oracle::rel_max_diff(oracle::to_eigen(multiply(lower_factor(st), upper_factor(st))),
                                             oracle::to_eigen(explicit_preconditioner(st)));
    CHECK(diff <= 1e-12);
  }
  SUBCASE("Yosida: the upper solve uses K^-1") {
    const auto st = build_general_lu(sys, HKind::DtMassInv, HKind::ExactK);
    const Dense d(sys);
    const MatrixXd hm = (0.01 * oracle::to_eigen(md).cwiseInverse()).asDiagonal();
    const MatrixXd sigma = d.B * hm * d.Bt + d.S;
    // z = U^-1 L^-1 r with L = [K 0; -B Sigma], U = [I K^-1 B^T; 0 I]
    const Index nu = sys.nu(), np = sys.np();
    MatrixXd L = MatrixXd::Zero(nu + np, nu + np), U = MatrixXd::Identity(nu + np, nu + np);
    L.block(0, 0, nu, nu) = d.K;
    L.block(nu, 0, np, nu) = -d.B;
    L.block(nu, nu, np, np) = sigma;
    U.block(0, nu, nu, np) = d.K.inverse() * d.Bt;
    const Vector r = oracle::random_vector(rng, sys.size());
    const VectorXd ref = (L * U).fullPivLu().solve(oracle::to_eigen(r).head(nu + np));
    const Vector z = apply_state(st, r);
    CHECK(oracle::rel_diff(std::span<const double>(z).subspan(0, static_cast<std::size_t>(nu + np)),
                           oracle::from_eigen(ref)) <= 1e-12);
    CHECK_THROWS_AS(explicit_preconditioner(st), ConfigError);
  }
  SUBCASE("unsupported combinations") {
    CHECK_THROWS_AS(build_general_lu(sys, HKind::ExactK, HKind::DiagK), ConfigError);
    sys.dt = 0.0;
    CHECK_THROWS_AS(build_general_lu(sys, HKind::DtMassInv, HKind::DtMassInv), ConfigError);
  }
}

TEST_CASE("augmented SIMPLE blocks by reassembly") {
  std::mt19937 rng(24);
  for (Index m : {1, 3}) {
    const auto sys = small_system(rng, m);
    const auto st = build_aug_simple(sys);
    const Dense d(sys);
    const MatrixXd Dinv = d.K.diagonal().cwiseInverse().asDiagonal();
    const MatrixXd sigma = d.B * Dinv * d.Bt + d.S;
    const MatrixXd Winv = sigma.diagonal().cwiseInverse().asDiagonal();
    const MatrixXd slp = d.Phi * Dinv * d.Bt, spl = d.B * Dinv * d.Phi.transpose();
    const MatrixXd sl = d.Phi * Dinv * d.Phi.transpose();
    CHECK(oracle::rel_max_diff(oracle::to_eigen(st.sigma), sigma) <= 1e-14);
    CHECK(oracle::rel_max_diff(oracle::to_eigen(st.sigma_lp), slp) <= 1e-14);
    CHECK(oracle::rel_max_diff(oracle::to_eigen(st.sigma_pl), spl) <= 1e-14);
    CHECK(oracle::rel_max_diff(oracle::to_eigen(st.sigma_l), sl) <= 1e-14);
    CHECK(oracle::rel_max_diff(oracle::to_eigen(st.l33), slp * Winv * spl - sl) <= 1e-13);
    CHECK(oracle::rel_max_diff(oracle::to_eigen(st.sigma_pl), oracle::to_eigen(st.sigma_lp).transpose()) <= 1e-13);
  }
}

TEST_CASE("augmented SIMPLE guards") {
  std::mt19937 rng(25);
  SUBCASE("repeated flux row") {
    auto sys = small_system(rng, 1);
    const SparseMatrix* rows[2][1] = {{&sys.Phi}, {&sys.Phi}};
    const Index rs[2] = {1, 1}, cs[1] = {sys.nu()};
    sys.Phi = block_matrix({{rows[0][0]}, {rows[1][0]}}, rs, cs);
    sys.Phit = sys.Phi.transpose();
    sys.Q = {1.0, 1.0};
    CHECK_THROWS_AS(build_aug_simple(sys), SingularL33Error);
  }
  SUBCASE("zero flux row") {
    auto sys = small_system(rng, 2);
    std::vector<Triplet> t;
    for (Index j = 0; j < sys.nu(); ++j) t.push_back({0, j, sys.Phi.coeff(0, j)});
    sys.Phi = SparseMatrix::from_triplets(2, sys.nu(), t);
    sys.Phit = sys.Phi.transpose();
    CHECK_THROWS_AS(build_aug_simple(sys), ConfigError);
  }
  SUBCASE("more than 32 sections") {
    const auto sys = oracle::random_block_system(rng, 80, 10, 33);
    CHECK_THROWS_AS(build_aug_simple(sys), ConfigError);
  }
}

TEST_CASE("augmented SIMPLE application") {
  std::mt19937 rng(26);
  const auto sys = small_system(rng, 2);
  const auto st = build_aug_simple(sys);
  const Index n = sys.size();
  CHECK(apply_state(st, Vector(static_cast<std::size_t>(n), 0.0)) == Vector(static_cast<std::size_t>(n), 0.0));

  SUBCASE("six-step application inverts the explicit matrix") {
    const MatrixXd p = dense_aug_simple(sys);
    const Vector r = oracle::random_vector(rng, n);
    const VectorXd pz = p * oracle::to_eigen(apply_state(st, r));
    CHECK(oracle::rel_diff(oracle::from_eigen(pz), r) <= 1e-10);
    CHECK(oracle::rel_max_diff(oracle::to_eigen(explicit_preconditioner(st)), p) <= 1e-13);
  }
  SUBCASE("third block row of the explicit form is [Phi 0 0]") {
    const MatrixXd p = oracle::to_eigen(explicit_preconditioner(st));
    CHECK(p.block(sys.nu(), sys.nu() + sys.np(), sys.np(), 0).size() == 0);
    CHECK(p.block(sys.nu() + sys.np(), sys.nu(), sys.m(), sys.np() + sys.m()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((p.block(sys.nu() + sys.np(), 0, sys.m(), sys.nu()) - oracle::to_eigen(sys.Phi)).cwiseAbs().maxCoeff() ==
          0.0);
  }
  SUBCASE("(F, 0, Q) against the five-step solver") {
    Vector r(static_cast<std::size_t>(n), 0.0);
    std::copy(sys.F.begin(), sys.F.end(), r.begin());
    std::copy(sys.Q.begin(), sys.Q.end(), r.begin() + sys.nu() + sys.np());
    const MonolithicVector x = aug_simple_like_solve(st, sys.F, Vector(static_cast<std::size_t>(sys.np()), 0.0), sys.Q);
    CHECK(oracle::rel_diff(x.all(), apply_state(st, r)) <= 1e-13);
    Vector flux = spmv(sys.Phi, x.u());
    for (std::size_t i = 0; i < flux.size(); ++i) CHECK(std::abs(flux[i] - sys.Q[i]) <= 1e-10 * norm2(sys.Q));
  }
}

TEST_CASE("identity-block extension") {
  std::mt19937 rng(27);
  const auto sys = small_system(rng, 3);
  const auto st = build_aug_identity(sys);
  const auto simple = build_simple(sys);
  const Vector r = oracle::random_vector(rng, sys.size());
  const Vector z = apply_state(st, r);
  for (Index i = 0; i < sys.m(); ++i) CHECK(z[sys.nu() + sys.np() + i] == r[sys.nu() + sys.np() + i]);
  CHECK(z == apply_state(simple, r));
  CHECK(apply_state(st, Vector(r.size(), 0.0)) == Vector(r.size(), 0.0));

  const auto sys0 = oracle::random_block_system(rng, 30, 12, 0);
  const Vector r0 = oracle::random_vector(rng, sys0.size());
  CHECK(apply_state(build_aug_identity(sys0), r0) == apply_state(build_simple(sys0), r0));
}

TEST_CASE("exact augmented LU") {
  std::mt19937 rng(28);
  const auto sys = small_system(rng, 2);
  const auto st = build_exact_aug_lu(sys);
  SUBCASE("applying then multiplying gives the identity") {
    const MatrixXd a = oracle::to_eigen(sys.assembled());
    const MatrixXd prod = a * inverse_by_columns(st);
    CHECK(oracle::rel_max_diff(prod, MatrixXd::Identity(sys.size(), sys.size())) <= 1e-9);
  }
  SUBCASE("L U reproduces A") {
    const MatrixXd lu = oracle::to_eigen(multiply(lower_factor(st), upper_factor(st)));
    CHECK(oracle::rel_max_diff(lu, oracle::to_eigen(sys.assembled())) <= 1e-9);
  }
  SUBCASE("GMRES needs at most two iterations") {
    const LinearOperator op = [&](std::span<const double> x, std::span<double> y) { sys.apply(x, y); };
    const LinearOperator pr = [&](std::span<const double> r, std::span<double> z) { apply_exact_aug_lu(st, r, z); };
    KrylovParams params;
    params.rel_tol = 1e-10;
    const auto res = gmres(op, pr, sys.rhs(), {}, params);
    CHECK(res.stats.converged);
    CHECK(res.stats.iterations <= 2);
  }
  SUBCASE("size guard") {
    const auto big = oracle::random_block_system(rng, 4000, 1200, 1);
    CHECK_THROWS_AS(build_exact_aug_lu(big), ConfigError);
  }
}

TEST_CASE("diagonal K and diagonal Sigma make aug-aS exact") {
  std::mt19937 rng(29);
  // each pressure row touches its own velocity unknowns, so B D^-1 B^T is diagonal
  const Index np = 5, nu = 15, m = 2;
  std::vector<Triplet> bt, pt;
  for (Index i = 0; i < np; ++i)
    for (Index k = 0; k < 3; ++k) bt.push_back({i, 3 * i + k, 1.0 + 0.3 * k});
  for (Index j = 0; j < nu; ++j) pt.push_back({j % m, j, 0.5 + 0.1 * j});
  Vector kd(nu);
  for (double& v : kd) v = 2.0 + std::uniform_real_distribution<double>(0, 1)(rng);
  const auto sys = make_block_system(SparseMatrix::diagonal(kd), SparseMatrix::from_triplets(np, nu, bt),
                                     SparseMatrix::identity(np, 0.1), SparseMatrix::from_triplets(m, nu, pt),
                                     oracle::random_vector(rng, nu), oracle::random_vector(rng, np),
                                     oracle::random_vector(rng, m));
  const auto aug = build_aug_simple(sys);
  CHECK(error_matrix(aug, sys).max_abs() <= 1e-14);
  const auto exact = build_exact_aug_lu(sys);
  const Vector r = oracle::random_vector(rng, sys.size());
  CHECK(oracle::rel_diff(apply_state(aug, r), apply_state(exact, r)) <= 1e-12);
}

TEST_CASE("error matrix blocks") {
  std::mt19937 rng(30);
  const auto sys = small_system(rng, 2);
  const auto st = build_aug_simple(sys);
  const MatrixXd e = oracle::to_eigen(error_matrix(st, sys));
  const Dense d(sys);
  const Index nu = sys.nu(), np = sys.np(), m = sys.m();
  const MatrixXd Dinv = d.K.diagonal().cwiseInverse().asDiagonal();
  const MatrixXd sigma = d.B * Dinv * d.Bt + d.S;
  const MatrixXd Winv = sigma.diagonal().cwiseInverse().asDiagonal();
  const MatrixXd spl = d.B * Dinv * d.Phi.transpose();
  const double scale = oracle::to_eigen(sys.assembled()).cwiseAbs().maxCoeff();

  const Index off[3] = {0, nu, nu + np}, len[3] = {nu, np, m};
  for (auto [r, c] : {std::pair{0, 0}, {1, 0}, {1, 1}, {2, 0}, {2, 1}, {2, 2}}) {
    CHECK(e.block(off[r], off[c], len[r], len[c]).cwiseAbs().maxCoeff() <= 1e-12 * scale);
  }
  const MatrixXd Iu = MatrixXd::Identity(nu, nu), Ip = MatrixXd::Identity(np, np);
  CHECK((e.block(0, nu, nu, np) - (Iu - d.K * Dinv) * d.Bt).cwiseAbs().maxCoeff() <= 1e-12 * scale);
  CHECK((e.block(0, nu + np, nu, m) - (Iu - d.K * Dinv) * d.Phi.transpose()).cwiseAbs().maxCoeff() <=
        1e-12 * scale);
  CHECK((e.block(nu, nu + np, np, m) - (Ip - sigma * Winv) * spl).cwiseAbs().maxCoeff() <= 1e-12 * scale);
}

TEST_CASE("property: factored and explicit forms agree for every variant") {
  std::mt19937 rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const Index m = 1 + trial % 4;
    auto sys = oracle::random_block_system(rng, 20 + 3 * trial, 8 + trial, m);
    for (const auto& st : {build_simple(sys), build_aug_simple(sys), build_aug_identity(sys)}) {
      const MatrixXd lu = oracle::to_eigen(multiply(lower_factor(st), upper_factor(st)));
      CHECK(oracle::rel_max_diff(lu, oracle::to_eigen(explicit_preconditioner(st))) <= 1e-12);
    }
  }
}

TEST_CASE("property: one augmented correction restores the flow rates") {
  std::mt19937 rng(32);
  for (int trial = 0; trial < 10; ++trial) {
    const auto sys = oracle::random_block_system(rng, 25, 10, 1 + trial % 3);
    const auto st = build_aug_simple(sys);
    Vector x = oracle::random_vector(rng, sys.size());
    Vector r = sys.rhs(), ax(r.size());
    sys.apply(x, ax);
    axpy(-1.0, ax, r);
    axpy(1.0, apply_state(st, r), x);
    const Vector flux = spmv(sys.Phi, std::span<const double>(x).subspan(0, static_cast<std::size_t>(sys.nu())));
    for (std::size_t i = 0; i < flux.size(); ++i) CHECK(std::abs(flux[i] - sys.Q[i]) <= 1e-10);
  }
}

TEST_CASE("property: applications are linear") {
  std::mt19937 rng(33);
  const auto sys = small_system(rng, 2);
  for (const auto& st : {build_simple(sys), build_aug_simple(sys), build_aug_identity(sys), build_exact_aug_lu(sys)}) {
    for (int trial = 0; trial < 5; ++trial) {
      const Vector a = oracle::random_vector(rng, sys.size()), b = oracle::random_vector(rng, sys.size());
      Vector c(a.size()), expected(a.size());
      const Vector za = apply_state(st, a), zb = apply_state(st, b);
      for (std::size_t i = 0; i < a.size(); ++i) {
        c[i] = 0.3 * a[i] - 2.0 * b[i];
        expected[i] = 0.3 * za[i] - 2.0 * zb[i];
      }
      CHECK(oracle::rel_diff(apply_state(st, c), expected) <= 1e-12);
    }
  }
}

TEST_CASE("inexact inner solvers are accepted") {
  std::mt19937 rng(34);
  const auto sys = small_system(rng, 1);
  const InnerSpecs inner{parse_inner_solver("ilu0"), parse_inner_solver("jacobi:2")};
  const auto st = build_aug_simple(sys, inner);
  const LinearOperator op = [&](std::span<const double> x, std::span<double> y) { sys.apply(x, y); };
  const LinearOperator pr = [&](std::span<const double> r, std::span<double> z) { apply_aug_simple(st, r, z); };
  const auto res = gmres(op, pr, sys.rhs(), {}, KrylovParams{});
  CHECK(res.stats.converged);
}

TEST_CASE("applying the wrong kind") {
  std::mt19937 rng(35);
  const auto sys = small_system(rng, 1);
  const auto st = build_simple(sys);
  Vector r(static_cast<std::size_t>(sys.size()), 1.0), z(r.size());
  CHECK_THROWS_AS(apply_aug_simple(st, r, z), ConfigError);
  Vector short_r(3);
  CHECK_THROWS_AS(apply_simple(st, short_r, z), ShapeError);
}
