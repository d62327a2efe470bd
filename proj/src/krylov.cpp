#include "dflow/krylov.hpp"

#include <chrono>
#include <cmath>
#include <string>

#include "dflow/errors.hpp"

namespace dflow {

namespace {

constexpr double kReorthogonalizeRatio = 0.7;

void check_finite(double value, int iteration) {
  if (!std::isfinite(value)) {
    throw BreakdownError("GMRES: non-finite residual at iteration " + std::to_string(iteration));
  }
}

void apply_prec(const LinearOperator& precond, std::span<const double> v, std::span<double> z) {
  if (precond) {
    precond(v, z);
  } else {
    std::copy(v.begin(), v.end(), z.begin());
  }
}

double residual(const LinearOperator& op, std::span<const double> b, std::span<const double> x, Vector& r) {
  op(x, r);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
  return norm2(r);
}

KrylovResult run(const LinearOperator& op, const LinearOperator& precond, std::span<const double> b,
                 std::span<const double> x0, const KrylovParams& params, bool flexible) {
  params.validate();
  const auto start = std::chrono::steady_clock::now();
  const std::size_t n = b.size();
  if (!x0.empty() && x0.size() != n) throw ShapeError("GMRES: initial guess length mismatch");

  KrylovResult out;
  out.x = x0.empty() ? Vector(n, 0.0) : Vector(x0.begin(), x0.end());
  KrylovStats& stats = out.stats;
  stats.rhs_norm = norm2(b);
  const double target = params.rel_tol * stats.rhs_norm + params.abs_tol;

  Vector r(n);
  double beta = residual(op, b, out.x, r);
  check_finite(beta, 0);
  stats.residual_history.push_back(beta);

  const int m = params.restart;
  std::vector<Vector> v;
  std::vector<Vector> z;
  std::vector<std::vector<double>> h(static_cast<std::size_t>(m + 1), std::vector<double>(static_cast<std::size_t>(m), 0.0));
  std::vector<double> cs(static_cast<std::size_t>(m)), sn(static_cast<std::size_t>(m));
  std::vector<double> g(static_cast<std::size_t>(m + 1));
  Vector w(n);

  while (beta > target && stats.iterations < params.max_iters) {
    v.assign(1, r);
    for (double& e : v[0]) e /= beta;
    z.clear();
    std::fill(g.begin(), g.end(), 0.0);
    g[0] = beta;

    int k = 0;
    bool happy = false;
    for (int j = 0; j < m && stats.iterations < params.max_iters; ++j) {
      Vector zj(n);
      apply_prec(precond, v[j], zj);
      op(zj, w);
      if (flexible) z.push_back(std::move(zj));

      // modified Gram-Schmidt, second pass when the column shrinks a lot
      const double norm_before = norm2(w);
      for (int i = 0; i <= j; ++i) {
        h[i][j] = dot(w, v[i]);
        axpy(-h[i][j], v[i], w);
      }
      double norm_after = norm2(w);
      if (norm_after < kReorthogonalizeRatio * norm_before) {
        for (int i = 0; i <= j; ++i) {
          const double c = dot(w, v[i]);
          h[i][j] += c;
          axpy(-c, v[i], w);
        }
        norm_after = norm2(w);
      }
      h[j + 1][j] = norm_after;
      check_finite(norm_after, stats.iterations + 1);

      for (int i = 0; i < j; ++i) {
        const double t = cs[i] * h[i][j] + sn[i] * h[i + 1][j];
        h[i + 1][j] = -sn[i] * h[i][j] + cs[i] * h[i + 1][j];
        h[i][j] = t;
      }
      const double denom = std::hypot(h[j][j], h[j + 1][j]);
      if (denom == 0.0) {
        // the new direction is annihilated by the operator
        throw BreakdownError("GMRES: singular Hessenberg column at iteration " +
                             std::to_string(stats.iterations + 1));
      }
      cs[j] = h[j][j] / denom;
      sn[j] = h[j + 1][j] / denom;
      h[j][j] = denom;
      h[j + 1][j] = 0.0;
      g[j + 1] = -sn[j] * g[j];
      g[j] = cs[j] * g[j];

      ++stats.iterations;
      k = j + 1;
      const double estimate = std::abs(g[j + 1]);
      check_finite(estimate, stats.iterations);
      stats.residual_history.push_back(estimate);

      happy = norm_after <= 1e-14 * norm_before;
      if (estimate <= target || happy) break;
      v.push_back(w);
      for (double& e : v.back()) e /= norm_after;
    }

    // y = R^{-1} g, then x += Z y (flexible) or M^{-1} V y
    std::vector<double> y(static_cast<std::size_t>(k));
    for (int i = k - 1; i >= 0; --i) {
      double s = g[i];
      for (int l = i + 1; l < k; ++l) s -= h[i][l] * y[l];
      y[i] = s / h[i][i];
    }
    if (flexible) {
      for (int i = 0; i < k; ++i) axpy(y[i], z[i], out.x);
    } else {
      Vector vy(n, 0.0);
      for (int i = 0; i < k; ++i) axpy(y[i], v[i], vy);
      Vector update(n);
      apply_prec(precond, vy, update);
      axpy(1.0, update, out.x);
    }

    const double previous = beta;
    beta = residual(op, b, out.x, r);
    check_finite(beta, stats.iterations);
    if (beta <= target) break;
    ++stats.restarts;
    if (happy && beta >= previous) break;  // invariant subspace exhausted without progress
  }

  stats.true_residual = beta;
  stats.converged = beta <= target;
  stats.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace

void KrylovParams::validate() const {
  if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) throw ConfigError("krylov: tolerances must be positive");
  if (restart < 1) throw ConfigError("krylov: restart must be at least 1");
  if (max_iters < 1) throw ConfigError("krylov: max_iters must be at least 1");
  if (restart > max_iters) throw ConfigError("krylov: restart must not exceed max_iters");
}

KrylovResult gmres(const LinearOperator& op, const LinearOperator& precond, std::span<const double> b,
                   std::span<const double> x0, const KrylovParams& params) {
  return run(op, precond, b, x0, params, params.flexible);
}

KrylovResult fgmres(const LinearOperator& op, const LinearOperator& precond, std::span<const double> b,
                    std::span<const double> x0, const KrylovParams& params) {
  return run(op, precond, b, x0, params, true);
}

}  // namespace dflow
