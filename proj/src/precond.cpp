#include "dflow/precond.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <utility>

#include "dflow/errors.hpp"

namespace dflow {

namespace {

constexpr Index kMaxSections = 32;
constexpr Index kMaxExactSize = 5000;

using CSpan = std::span<const double>;
using MSpan = std::span<double>;

template <class Fn>
void labelled(const char* label, Fn&& fn) {
  try {
    fn();
  } catch (const SingularMatrixError& e) {
    throw SingularMatrixError(std::string(label) + ": " + e.what());
  } catch (const Error& e) {
    throw Error(std::string(label) + ": " + e.what());
  }
}

void check_lengths(const PreconditionerState& st, CSpan r, MSpan z) {
  if (static_cast<Index>(r.size()) != st.size() || static_cast<Index>(z.size()) != st.size()) {
    throw ShapeError("preconditioner: vector length " + std::to_string(r.size()) + "/" +
                     std::to_string(z.size()) + ", expected " + std::to_string(st.size()));
  }
}

void copy_blocks(PreconditionerState& st, const BlockSystem& sys) {
  st.nu = sys.nu();
  st.np = sys.np();
  st.m = sys.m();
  st.K = sys.K;
  st.B = sys.B;
  st.Bt = sys.Bt;
  st.S = sys.S;
  st.Phi = sys.Phi;
  st.Phit = sys.Phit;
}

void check_flux_rows(const SparseMatrix& phi) {
  if (phi.rows() > kMaxSections) {
    throw ConfigError("preconditioner: at most " + std::to_string(kMaxSections) + " flow sections supported");
  }
  for (Index i = 0; i < phi.rows(); ++i) {
    const auto v = phi.row_values(i);
    if (std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; })) {
      throw ConfigError("preconditioner: flux row " + std::to_string(i) + " is zero");
    }
  }
}

Vector dt_mass_inverse(const BlockSystem& sys) {
  if (!(sys.dt > 0.0)) throw ConfigError("preconditioner: Delta t M^{-1} needs an unsteady system");
  if (sys.M.rows() != sys.nu() || sys.M.nnz() == 0) {
    throw ConfigError("preconditioner: Delta t M^{-1} needs the mass matrix");
  }
  Vector h = diag_inverse(sys.M);
  for (double& v : h) v *= sys.dt;
  return h;
}

DenseMatrix dense_of(const SparseMatrix& a) { return a.to_dense(); }

// Applies the velocity correction H2 B^T z2.
void velocity_correction(const PreconditionerState& st, CSpan z2, MSpan out) {
  Vector bt_z2(static_cast<std::size_t>(st.nu));
  st.Bt.multiply(z2, bt_z2);
  if (st.h2 == HKind::ExactK) {
    labelled("upper velocity solve", [&] { st.k_solver->apply(bt_z2, out); });
  } else {
    for (Index i = 0; i < st.nu; ++i) out[i] = st.h2_diag[i] * bt_z2[i];
  }
}

void require_kind(const PreconditionerState& st, std::initializer_list<PrecondKind> kinds, const char* what) {
  for (auto k : kinds) {
    if (st.kind == k) return;
  }
  throw ConfigError(std::string(what) + ": state was built as " + to_string(st.kind));
}

}  // namespace

std::string to_string(PrecondKind kind) {
  switch (kind) {
    case PrecondKind::Simple: return "simple";
    case PrecondKind::GeneralLU: return "general-lu";
    case PrecondKind::AugSimple: return "aug-as";
    case PrecondKind::AugIdentity: return "aug-as-i";
    case PrecondKind::ExactAugLU: return "exact-lu";
  }
  return "unknown";
}

PrecondKind parse_precond_kind(std::string_view text) {
  if (text == "simple") return PrecondKind::Simple;
  if (text == "aug-as") return PrecondKind::AugSimple;
  if (text == "aug-as-i") return PrecondKind::AugIdentity;
  if (text == "exact-lu") return PrecondKind::ExactAugLU;
  throw ConfigError("unknown preconditioner '" + std::string(text) + "'");
}

PreconditionerState build_general_lu(const BlockSystem& sys, HKind h1, HKind h2, const InnerSpecs& inner) {
  PreconditionerState st;
  st.kind = PrecondKind::GeneralLU;
  st.h1 = h1;
  st.h2 = h2;
  copy_blocks(st, sys);
  st.d = sys.K.diagonal();
  st.dinv = diag_inverse(sys.K);

  switch (h1) {
    case HKind::DiagK: st.h1_diag = st.dinv; break;
    case HKind::DtMassInv: st.h1_diag = dt_mass_inverse(sys); break;
    case HKind::ExactK: throw ConfigError("general LU: H1 = K^{-1} would need a dense Schur complement");
  }
  switch (h2) {
    case HKind::DiagK: st.h2_diag = st.dinv; break;
    case HKind::DtMassInv: st.h2_diag = dt_mass_inverse(sys); break;
    case HKind::ExactK: break;
  }

  st.sigma = add(1.0, scaled_triple_product(sys.B, st.h1_diag, sys.B), 1.0, sys.S);
  st.w = st.sigma.diagonal();
  st.k_solver = make_inner_solver(sys.K, inner.velocity);
  st.sigma_solver = make_inner_solver(st.sigma, inner.schur);
  return st;
}

PreconditionerState build_simple(const BlockSystem& sys, const InnerSpecs& inner) {
  PreconditionerState st = build_general_lu(sys, HKind::DiagK, HKind::DiagK, inner);
  st.kind = PrecondKind::Simple;
  return st;
}

PreconditionerState build_aug_identity(const BlockSystem& sys, const InnerSpecs& inner) {
  PreconditionerState st = build_general_lu(sys, HKind::DiagK, HKind::DiagK, inner);
  st.kind = PrecondKind::AugIdentity;
  return st;
}

PreconditionerState build_aug_simple(const BlockSystem& sys, const InnerSpecs& inner) {
  check_flux_rows(sys.Phi);
  PreconditionerState st = build_general_lu(sys, HKind::DiagK, HKind::DiagK, inner);
  st.kind = PrecondKind::AugSimple;
  st.winv = diag_inverse(st.sigma);

  st.sigma_lp = scaled_triple_product(sys.Phi, st.dinv, sys.B);
  st.sigma_pl = scaled_triple_product(sys.B, st.dinv, sys.Phi);
  st.sigma_l = dense_of(scaled_triple_product(sys.Phi, st.dinv, sys.Phi));

  const SparseMatrix lp_winv = scale(st.sigma_lp, {}, st.winv);
  DenseMatrix l33 = dense_of(multiply(lp_winv, st.sigma_pl));
  for (Index i = 0; i < st.m; ++i) {
    for (Index j = 0; j < st.m; ++j) l33(i, j) -= st.sigma_l(i, j);
  }
  st.l33 = l33;
  if (st.m > 0) {
    try {
      st.l33_lu = DenseLu(std::move(l33));
    } catch (const SingularMatrixError& e) {
      throw SingularL33Error(std::string("L33 is singular (dependent flow sections?): ") + e.what());
    }
  }
  return st;
}

PreconditionerState build_exact_aug_lu(const BlockSystem& sys) {
  if (sys.size() > kMaxExactSize) {
    throw ConfigError("exact augmented LU: system size " + std::to_string(sys.size()) + " exceeds " +
                      std::to_string(kMaxExactSize));
  }
  check_flux_rows(sys.Phi);
  PreconditionerState st;
  st.kind = PrecondKind::ExactAugLU;
  copy_blocks(st, sys);
  st.d = sys.K.diagonal();
  st.k_solver = make_inner_solver(sys.K, {InnerKind::DirectLU});

  const Index nu = st.nu, np = st.np, m = st.m;
  // Shat = B K^{-1} B^T + S and Phi K^{-1} B^T, one column per pressure dof
  // (column l of B^T is row l of B)
  DenseMatrix schur = dense_of(sys.S);
  DenseMatrix phi_kinv_bt(m, np);
  Vector col(static_cast<std::size_t>(nu));
  Vector x(static_cast<std::size_t>(nu));
  Vector bx(static_cast<std::size_t>(np));
  Vector phix(static_cast<std::size_t>(m));
  for (Index l = 0; l < np; ++l) {
    std::fill(col.begin(), col.end(), 0.0);
    const auto c = sys.B.row_columns(l);
    const auto v = sys.B.row_values(l);
    for (std::size_t k = 0; k < c.size(); ++k) col[c[k]] = v[k];
    st.k_solver->apply(col, x);
    sys.B.multiply(x, bx);
    for (Index i = 0; i < np; ++i) schur(i, l) += bx[i];
    if (m > 0) {
      sys.Phi.multiply(x, phix);
      for (Index i = 0; i < m; ++i) phi_kinv_bt(i, l) = phix[i];
    }
  }
  try {
    st.schur_lu = DenseLu(std::move(schur));
  } catch (const SingularMatrixError& e) {
    throw SingularMatrixError(std::string("exact augmented LU: pressure Schur complement: ") + e.what());
  }

  if (m > 0) {
    // X = K^{-1} Phi^T, Y = Shat^{-1} B X, L33 = (Phi K^{-1} B^T) Y - Phi X
    DenseMatrix bx_cols(np, m);
    DenseMatrix phi_x(m, m);
    for (Index j = 0; j < m; ++j) {
      std::fill(col.begin(), col.end(), 0.0);
      const auto c = sys.Phi.row_columns(j);
      const auto v = sys.Phi.row_values(j);
      for (std::size_t k = 0; k < c.size(); ++k) col[c[k]] = v[k];
      st.k_solver->apply(col, x);
      sys.B.multiply(x, bx);
      st.schur_lu.solve_in_place(bx);
      for (Index i = 0; i < np; ++i) bx_cols(i, j) = bx[i];
      sys.Phi.multiply(x, phix);
      for (Index i = 0; i < m; ++i) phi_x(i, j) = phix[i];
    }
    st.exact_y = std::move(bx_cols);
    st.sigma_lp = SparseMatrix::from_dense(phi_kinv_bt);
    DenseMatrix l33 = phi_kinv_bt.multiply(st.exact_y);
    for (Index i = 0; i < m; ++i) {
      for (Index j = 0; j < m; ++j) l33(i, j) -= phi_x(i, j);
    }
    st.exact_l33 = l33;
    try {
      st.l33_lu = DenseLu(std::move(l33));
    } catch (const SingularMatrixError& e) {
      throw SingularL33Error(std::string("exact L33 is singular: ") + e.what());
    }
  }
  return st;
}

PreconditionerState build_preconditioner(PrecondKind kind, const BlockSystem& sys, const InnerSpecs& inner) {
  switch (kind) {
    case PrecondKind::Simple: return build_simple(sys, inner);
    case PrecondKind::GeneralLU: return build_general_lu(sys, HKind::DiagK, HKind::DiagK, inner);
    case PrecondKind::AugSimple: return build_aug_simple(sys, inner);
    case PrecondKind::AugIdentity: return build_aug_identity(sys, inner);
    case PrecondKind::ExactAugLU: return build_exact_aug_lu(sys);
  }
  throw ConfigError("unsupported preconditioner");
}

void apply_simple(const PreconditionerState& st, CSpan r, MSpan z) {
  require_kind(st, {PrecondKind::Simple, PrecondKind::GeneralLU, PrecondKind::AugIdentity}, "apply_simple");
  check_lengths(st, r, z);
  const Index nu = st.nu, np = st.np;
  const CSpan r1 = r.subspan(0, nu), r2 = r.subspan(nu, np), r3 = r.subspan(nu + np);
  const MSpan z1 = z.subspan(0, nu), z2 = z.subspan(nu, np), z3 = z.subspan(nu + np);

  Vector y1(static_cast<std::size_t>(nu));
  labelled("SIMPLE step 1 (K y1 = r1)", [&] { st.k_solver->apply(r1, y1); });
  Vector t(r2.begin(), r2.end());
  st.B.multiply_add(1.0, y1, t);
  labelled("SIMPLE step 2 (Sigma y2 = r2 + B y1)", [&] { st.sigma_solver->apply(t, z2); });

  Vector corr(static_cast<std::size_t>(nu));
  velocity_correction(st, z2, corr);
  for (Index i = 0; i < nu; ++i) z1[i] = y1[i] - corr[i];
  std::copy(r3.begin(), r3.end(), z3.begin());
}

void apply_aug_identity(const PreconditionerState& st, CSpan r, MSpan z) { apply_simple(st, r, z); }

void apply_aug_simple(const PreconditionerState& st, CSpan r, MSpan z) {
  require_kind(st, {PrecondKind::AugSimple}, "apply_aug_simple");
  check_lengths(st, r, z);
  const Index nu = st.nu, np = st.np, m = st.m;
  const CSpan r1 = r.subspan(0, nu), r2 = r.subspan(nu, np), r3 = r.subspan(nu + np);
  const MSpan z1 = z.subspan(0, nu), z2 = z.subspan(nu, np), z3 = z.subspan(nu + np);

  // forward substitution
  Vector y1(static_cast<std::size_t>(nu));
  labelled("aug-aS step 1 (K y1 = r1)", [&] { st.k_solver->apply(r1, y1); });

  Vector t2(r2.begin(), r2.end());
  st.B.multiply_add(1.0, y1, t2);
  Vector y2(static_cast<std::size_t>(np));
  labelled("aug-aS step 2 (Sigma y2 = r2 + B y1)", [&] { st.sigma_solver->apply(t2, y2); });

  Vector y3(r3.begin(), r3.end());
  if (m > 0) {
    st.Phi.multiply_add(-1.0, y1, y3);
    st.sigma_lp.multiply_add(1.0, y2, y3);
    labelled("aug-aS step 3 (L33 y3 = r3 - Phi y1 + Sigma_LP y2)", [&] { st.l33_lu.solve_in_place(y3); });
  }

  // backward substitution
  std::copy(y3.begin(), y3.end(), z3.begin());
  Vector pl_z3(static_cast<std::size_t>(np), 0.0);
  if (m > 0) st.sigma_pl.multiply(z3, pl_z3);
  for (Index i = 0; i < np; ++i) z2[i] = y2[i] - st.winv[i] * pl_z3[i];

  Vector bt_z2(static_cast<std::size_t>(nu));
  st.Bt.multiply(z2, bt_z2);
  Vector phit_z3(static_cast<std::size_t>(nu), 0.0);
  if (m > 0) st.Phit.multiply(z3, phit_z3);
  for (Index i = 0; i < nu; ++i) z1[i] = y1[i] - st.dinv[i] * bt_z2[i] - st.dinv[i] * phit_z3[i];
}

void apply_exact_aug_lu(const PreconditionerState& st, CSpan r, MSpan z) {
  require_kind(st, {PrecondKind::ExactAugLU}, "apply_exact_aug_lu");
  check_lengths(st, r, z);
  const Index nu = st.nu, np = st.np, m = st.m;
  const CSpan r1 = r.subspan(0, nu), r2 = r.subspan(nu, np), r3 = r.subspan(nu + np);
  const MSpan z1 = z.subspan(0, nu), z2 = z.subspan(nu, np), z3 = z.subspan(nu + np);

  Vector y1(static_cast<std::size_t>(nu));
  labelled("exact LU step 1 (K y1 = r1)", [&] { st.k_solver->apply(r1, y1); });
  Vector y2(r2.begin(), r2.end());
  st.B.multiply_add(1.0, y1, y2);
  st.schur_lu.solve_in_place(y2);
  Vector y3(r3.begin(), r3.end());
  if (m > 0) {
    st.Phi.multiply_add(-1.0, y1, y3);
    st.sigma_lp.multiply_add(1.0, y2, y3);
    st.l33_lu.solve_in_place(y3);
  }

  std::copy(y3.begin(), y3.end(), z3.begin());
  for (Index i = 0; i < np; ++i) {
    double s = y2[i];
    for (Index j = 0; j < m; ++j) s -= st.exact_y(i, j) * y3[j];
    z2[i] = s;
  }
  Vector t(static_cast<std::size_t>(nu));
  st.Bt.multiply(z2, t);
  if (m > 0) st.Phit.multiply_add(1.0, z3, t);
  Vector corr(static_cast<std::size_t>(nu));
  labelled("exact LU step 6 (K correction)", [&] { st.k_solver->apply(t, corr); });
  for (Index i = 0; i < nu; ++i) z1[i] = y1[i] - corr[i];
}

void apply_preconditioner(const PreconditionerState& st, CSpan r, MSpan z) {
  switch (st.kind) {
    case PrecondKind::Simple:
    case PrecondKind::GeneralLU: apply_simple(st, r, z); return;
    case PrecondKind::AugIdentity: apply_aug_identity(st, r, z); return;
    case PrecondKind::AugSimple: apply_aug_simple(st, r, z); return;
    case PrecondKind::ExactAugLU: apply_exact_aug_lu(st, r, z); return;
  }
}

MonolithicVector simple_like_solve(const PreconditionerState& st, CSpan F, CSpan G) {
  require_kind(st, {PrecondKind::Simple, PrecondKind::GeneralLU, PrecondKind::AugIdentity}, "simple_like_solve");
  if (static_cast<Index>(F.size()) != st.nu || static_cast<Index>(G.size()) != st.np) {
    throw ShapeError("simple_like_solve: right-hand side sizes do not match the system");
  }
  MonolithicVector out(st.nu, st.np, 0);
  // intermediate velocity
  Vector u_tilde(static_cast<std::size_t>(st.nu));
  st.k_solver->apply(F, u_tilde);
  // pressure
  Vector rhs = spmv(st.B, u_tilde);
  axpy(1.0, G, rhs);
  st.sigma_solver->apply(rhs, out.p());
  // velocity update
  Vector corr(static_cast<std::size_t>(st.nu));
  velocity_correction(st, out.p(), corr);
  auto u = out.u();
  for (Index i = 0; i < st.nu; ++i) u[i] = u_tilde[i] - corr[i];
  return out;
}

MonolithicVector aug_simple_like_solve(const PreconditionerState& st, CSpan F, CSpan G, CSpan Q) {
  require_kind(st, {PrecondKind::AugSimple}, "aug_simple_like_solve");
  if (static_cast<Index>(F.size()) != st.nu || static_cast<Index>(G.size()) != st.np ||
      static_cast<Index>(Q.size()) != st.m) {
    throw ShapeError("aug_simple_like_solve: right-hand side sizes do not match the system");
  }
  const Index nu = st.nu, np = st.np, m = st.m;
  MonolithicVector out(nu, np, m);

  // 1. intermediate velocity
  Vector u_tilde(static_cast<std::size_t>(nu));
  st.k_solver->apply(F, u_tilde);
  // 2. intermediate pressure
  Vector rhs_p = spmv(st.B, u_tilde);
  axpy(1.0, G, rhs_p);
  Vector p_tilde(static_cast<std::size_t>(np));
  st.sigma_solver->apply(rhs_p, p_tilde);
  // 3. Lagrange multipliers
  auto lambda = out.lambda();
  if (m > 0) {
    Vector rhs_l(Q.begin(), Q.end());
    st.sigma_lp.multiply_add(1.0, p_tilde, rhs_l);
    st.Phi.multiply_add(-1.0, u_tilde, rhs_l);
    st.l33_lu.solve_in_place(rhs_l);
    std::copy(rhs_l.begin(), rhs_l.end(), lambda.begin());
  }
  // 4. pressure update
  Vector pl_lambda(static_cast<std::size_t>(np), 0.0);
  if (m > 0) st.sigma_pl.multiply(lambda, pl_lambda);
  auto p = out.p();
  for (Index i = 0; i < np; ++i) p[i] = p_tilde[i] - st.winv[i] * pl_lambda[i];
  // 5. velocity update
  Vector bt_p = spmv(st.Bt, p);
  Vector phit_l(static_cast<std::size_t>(nu), 0.0);
  if (m > 0) st.Phit.multiply(lambda, phit_l);
  auto u = out.u();
  for (Index i = 0; i < nu; ++i) u[i] = u_tilde[i] - st.dinv[i] * bt_p[i] - st.dinv[i] * phit_l[i];
  return out;
}

SparseMatrix lower_factor(const PreconditionerState& st) {
  const std::array<Index, 3> sizes{st.nu, st.np, st.m};
  SparseMatrix neg_b = st.B;
  for (double& v : neg_b.values()) v = -v;

  switch (st.kind) {
    case PrecondKind::Simple:
    case PrecondKind::GeneralLU:
    case PrecondKind::AugIdentity: {
      const SparseMatrix eye = SparseMatrix::identity(st.m);
      return block_matrix({{&st.K, nullptr, nullptr}, {&neg_b, &st.sigma, nullptr}, {nullptr, nullptr, &eye}},
                          sizes, sizes);
    }
    case PrecondKind::AugSimple: {
      SparseMatrix neg_lp = st.sigma_lp;
      for (double& v : neg_lp.values()) v = -v;
      const SparseMatrix l33 = SparseMatrix::from_dense(st.l33);
      return block_matrix({{&st.K, nullptr, nullptr}, {&neg_b, &st.sigma, nullptr}, {&st.Phi, &neg_lp, &l33}},
                          sizes, sizes);
    }
    case PrecondKind::ExactAugLU: {
      // Shat is rebuilt from the factors: Shat = L U of the stored dense LU
      DenseMatrix schur(st.np, st.np);
      for (Index j = 0; j < st.np; ++j) {
        Vector e(static_cast<std::size_t>(st.np), 0.0);
        e[j] = 1.0;
        Vector kinv_bt(static_cast<std::size_t>(st.nu));
        Vector col(static_cast<std::size_t>(st.nu));
        st.Bt.multiply(e, col);
        st.k_solver->apply(col, kinv_bt);
        Vector bcol = spmv(st.B, kinv_bt);
        for (Index i = 0; i < st.np; ++i) schur(i, j) = bcol[i] + st.S.coeff(i, j);
      }
      const SparseMatrix schur_s = SparseMatrix::from_dense(schur);
      SparseMatrix neg_lp = st.sigma_lp;
      for (double& v : neg_lp.values()) v = -v;
      const SparseMatrix l33 = SparseMatrix::from_dense(st.exact_l33);
      return block_matrix({{&st.K, nullptr, nullptr}, {&neg_b, &schur_s, nullptr}, {&st.Phi, &neg_lp, &l33}},
                          sizes, sizes);
    }
  }
  throw ConfigError("lower_factor: unsupported variant");
}

SparseMatrix upper_factor(const PreconditionerState& st) {
  const std::array<Index, 3> sizes{st.nu, st.np, st.m};
  const SparseMatrix eye_u = SparseMatrix::identity(st.nu);
  const SparseMatrix eye_p = SparseMatrix::identity(st.np);
  const SparseMatrix eye_m = SparseMatrix::identity(st.m);

  switch (st.kind) {
    case PrecondKind::Simple:
    case PrecondKind::GeneralLU:
    case PrecondKind::AugIdentity: {
      if (st.h2 == HKind::ExactK) throw ConfigError("upper_factor: H2 = K^{-1} has no sparse form");
      const SparseMatrix h2bt = scale(st.Bt, st.h2_diag, {});
      return block_matrix({{&eye_u, &h2bt, nullptr}, {nullptr, &eye_p, nullptr}, {nullptr, nullptr, &eye_m}},
                          sizes, sizes);
    }
    case PrecondKind::AugSimple: {
      const SparseMatrix dbt = scale(st.Bt, st.dinv, {});
      const SparseMatrix dphit = scale(st.Phit, st.dinv, {});
      const SparseMatrix wpl = scale(st.sigma_pl, st.winv, {});
      return block_matrix({{&eye_u, &dbt, &dphit}, {nullptr, &eye_p, &wpl}, {nullptr, nullptr, &eye_m}},
                          sizes, sizes);
    }
    case PrecondKind::ExactAugLU: {
      const Index nu = st.nu;
      DenseMatrix kinv_bt(nu, st.np);
      DenseMatrix kinv_phit(nu, st.m);
      Vector col(static_cast<std::size_t>(nu));
      Vector x(static_cast<std::size_t>(nu));
      for (Index j = 0; j < st.np + st.m; ++j) {
        Vector e(static_cast<std::size_t>(j < st.np ? st.np : st.m), 0.0);
        e[j < st.np ? j : j - st.np] = 1.0;
        (j < st.np ? st.Bt : st.Phit).multiply(e, col);
        st.k_solver->apply(col, x);
        for (Index i = 0; i < nu; ++i) {
          if (j < st.np) {
            kinv_bt(i, j) = x[i];
          } else {
            kinv_phit(i, j - st.np) = x[i];
          }
        }
      }
      const SparseMatrix a12 = SparseMatrix::from_dense(kinv_bt);
      const SparseMatrix a13 = SparseMatrix::from_dense(kinv_phit);
      const SparseMatrix a23 = SparseMatrix::from_dense(st.exact_y);
      return block_matrix({{&eye_u, &a12, &a13}, {nullptr, &eye_p, &a23}, {nullptr, nullptr, &eye_m}}, sizes,
                          sizes);
    }
  }
  throw ConfigError("upper_factor: unsupported variant");
}

SparseMatrix explicit_preconditioner(const PreconditionerState& st) {
  const std::array<Index, 3> sizes{st.nu, st.np, st.m};
  SparseMatrix neg_b = st.B;
  for (double& v : neg_b.values()) v = -v;

  switch (st.kind) {
    case PrecondKind::Simple:
    case PrecondKind::GeneralLU:
    case PrecondKind::AugIdentity: {
      if (st.h2 == HKind::ExactK) throw ConfigError("explicit_preconditioner: H2 = K^{-1} has no sparse form");
      // [K, K H2 B^T; -B, S + B (H1 - H2) B^T]
      const SparseMatrix k_h2_bt = multiply(st.K, scale(st.Bt, st.h2_diag, {}));
      Vector diff(st.h1_diag.size());
      for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = st.h1_diag[i] - st.h2_diag[i];
      const SparseMatrix a22 = add(1.0, st.S, 1.0, scaled_triple_product(st.B, diff, st.B));
      const SparseMatrix eye = SparseMatrix::identity(st.m);
      return block_matrix({{&st.K, &k_h2_bt, nullptr}, {&neg_b, &a22, nullptr}, {nullptr, nullptr, &eye}}, sizes,
                          sizes);
    }
    case PrecondKind::AugSimple: {
      // [K, K D^-1 B^T, K D^-1 Phi^T; -B, S, -(I - Sigma W^-1) Sigma_PL; Phi, 0, 0]
      const SparseMatrix a12 = multiply(st.K, scale(st.Bt, st.dinv, {}));
      const SparseMatrix a13 = multiply(st.K, scale(st.Phit, st.dinv, {}));
      const SparseMatrix a23 =
          add(-1.0, st.sigma_pl, 1.0, multiply(st.sigma, scale(st.sigma_pl, st.winv, {})));
      return block_matrix({{&st.K, &a12, &a13}, {&neg_b, &st.S, &a23}, {&st.Phi, nullptr, nullptr}}, sizes,
                          sizes);
    }
    case PrecondKind::ExactAugLU:
      return block_matrix({{&st.K, &st.Bt, &st.Phit}, {&neg_b, &st.S, nullptr}, {&st.Phi, nullptr, nullptr}},
                          sizes, sizes);
  }
  throw ConfigError("explicit_preconditioner: unsupported variant");
}

SparseMatrix error_matrix(const PreconditionerState& st, const BlockSystem& sys) {
  return add(1.0, sys.assembled(), -1.0, explicit_preconditioner(st));
}

}  // namespace dflow
