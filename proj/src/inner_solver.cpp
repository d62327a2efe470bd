#include "dflow/inner_solver.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <charconv>
#include <cmath>
#include <random>
#include <vector>

#include "dflow/errors.hpp"

namespace dflow {

namespace {

class DirectLuSolver final : public InnerSolver {
 public:
  explicit DirectLuSolver(const SparseMatrix& a) : n_(a.rows()) {
    std::vector<Eigen::Triplet<double>> entries;
    entries.reserve(static_cast<std::size_t>(a.nnz()));
    for (Index i = 0; i < a.rows(); ++i) {
      const auto c = a.row_columns(i);
      const auto v = a.row_values(i);
      for (std::size_t k = 0; k < c.size(); ++k) entries.emplace_back(i, c[k], v[k]);
    }
    Eigen::SparseMatrix<double> mat(a.rows(), a.cols());
    mat.setFromTriplets(entries.begin(), entries.end());
    mat.makeCompressed();
    lu_.analyzePattern(mat);
    lu_.factorize(mat);
    if (lu_.info() != Eigen::Success) {
      throw SingularMatrixError("direct LU: factorization failed (" + lu_.lastErrorMessage() + ")");
    }
  }

  void apply(std::span<const double> b, std::span<double> x) const override {
    if (static_cast<Index>(b.size()) != n_ || static_cast<Index>(x.size()) != n_) {
      throw ShapeError("direct LU: length mismatch");
    }
    const Eigen::Map<const Eigen::VectorXd> rhs(b.data(), n_);
    Eigen::Map<Eigen::VectorXd> out(x.data(), n_);
    out = lu_.solve(rhs);
  }

  InnerKind kind() const override { return InnerKind::DirectLU; }
  Index size() const override { return n_; }

 private:
  Index n_;
  // solve() is logically const; Eigen keeps no mutable state during it
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu_;
};

class Ilu0Solver final : public InnerSolver {
 public:
  explicit Ilu0Solver(const SparseMatrix& a) : lu_(a), diag_pos_(static_cast<std::size_t>(a.rows()), -1) {
    const Index n = a.rows();
    const auto off = lu_.row_offsets();
    const auto col = lu_.col_indices();
    auto val = lu_.values();
    for (Index i = 0; i < n; ++i) {
      for (Index k = off[i]; k < off[i + 1]; ++k) {
        if (col[k] == i) diag_pos_[i] = k;
      }
      if (diag_pos_[i] < 0) throw SingularDiagonalError(i, 0.0);
    }
    std::vector<Index> pos(static_cast<std::size_t>(n), -1);
    for (Index i = 0; i < n; ++i) {
      for (Index k = off[i]; k < off[i + 1]; ++k) pos[col[k]] = k;
      for (Index k = off[i]; k < off[i + 1] && col[k] < i; ++k) {
        const Index j = col[k];
        const double piv = val[diag_pos_[j]];
        if (piv == 0.0) throw SingularDiagonalError(j, 0.0);
        val[k] /= piv;
        const double lij = val[k];
        for (Index q = diag_pos_[j] + 1; q < off[j + 1]; ++q) {
          const Index p = pos[col[q]];
          if (p >= 0) val[p] -= lij * val[q];
        }
      }
      for (Index k = off[i]; k < off[i + 1]; ++k) pos[col[k]] = -1;
      if (val[diag_pos_[i]] == 0.0) throw SingularDiagonalError(i, 0.0);
    }
  }

  void apply(std::span<const double> b, std::span<double> x) const override {
    const Index n = lu_.rows();
    if (static_cast<Index>(b.size()) != n || static_cast<Index>(x.size()) != n) {
      throw ShapeError("ILU(0): length mismatch");
    }
    const auto off = lu_.row_offsets();
    const auto col = lu_.col_indices();
    const auto val = lu_.values();
    for (Index i = 0; i < n; ++i) {
      double s = b[i];
      for (Index k = off[i]; k < diag_pos_[i]; ++k) s -= val[k] * x[col[k]];
      x[i] = s;
    }
    for (Index i = n - 1; i >= 0; --i) {
      double s = x[i];
      for (Index k = diag_pos_[i] + 1; k < off[i + 1]; ++k) s -= val[k] * x[col[k]];
      x[i] = s / val[diag_pos_[i]];
    }
  }

  InnerKind kind() const override { return InnerKind::ILU0; }
  Index size() const override { return lu_.rows(); }

 private:
  SparseMatrix lu_;  // strict lower part holds L (unit diagonal implied), rest holds U
  std::vector<Index> diag_pos_;
};

class JacobiSolver final : public InnerSolver {
 public:
  JacobiSolver(const SparseMatrix& a, int sweeps, double damping)
      : a_(a), dinv_(diag_inverse(a)), sweeps_(sweeps), damping_(damping) {
    if (sweeps < 1) throw ConfigError("jacobi: sweep count must be at least 1");
  }

  void apply(std::span<const double> b, std::span<double> x) const override {
    const Index n = a_.rows();
    if (static_cast<Index>(b.size()) != n || static_cast<Index>(x.size()) != n) {
      throw ShapeError("jacobi: length mismatch");
    }
    for (Index i = 0; i < n; ++i) x[i] = damping_ * dinv_[i] * b[i];
    Vector r(static_cast<std::size_t>(n));
    for (int s = 1; s < sweeps_; ++s) {
      a_.multiply(x, r);
      for (Index i = 0; i < n; ++i) x[i] += damping_ * dinv_[i] * (b[i] - r[i]);
    }
  }

  InnerKind kind() const override { return InnerKind::Jacobi; }
  Index size() const override { return a_.rows(); }

 private:
  SparseMatrix a_;
  Vector dinv_;
  int sweeps_;
  double damping_;
};

class ChebyshevSolver final : public InnerSolver {
 public:
  ChebyshevSolver(const SparseMatrix& a, int sweeps)
      : a_(a), dinv_(diag_inverse(a)), sweeps_(sweeps), bounds_(estimate_chebyshev_bounds(a)) {
    if (sweeps < 1) throw ConfigError("chebyshev: sweep count must be at least 1");
  }

  void apply(std::span<const double> b, std::span<double> x) const override {
    const Index n = a_.rows();
    if (static_cast<Index>(b.size()) != n || static_cast<Index>(x.size()) != n) {
      throw ShapeError("chebyshev: length mismatch");
    }
    const double theta = 0.5 * (bounds_.lambda_max + bounds_.lambda_min);
    const double delta = 0.5 * (bounds_.lambda_max - bounds_.lambda_min);
    const double sigma = theta / delta;
    double rho = 1.0 / sigma;

    Vector d(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
      d[i] = dinv_[i] * b[i] / theta;
      x[i] = d[i];
    }
    Vector r(static_cast<std::size_t>(n));
    for (int s = 1; s < sweeps_; ++s) {
      a_.multiply(x, r);
      const double rho_next = 1.0 / (2.0 * sigma - rho);
      for (Index i = 0; i < n; ++i) {
        d[i] = rho_next * rho * d[i] + 2.0 * rho_next / delta * dinv_[i] * (b[i] - r[i]);
        x[i] += d[i];
      }
      rho = rho_next;
    }
  }

  InnerKind kind() const override { return InnerKind::Chebyshev; }
  Index size() const override { return a_.rows(); }

 private:
  SparseMatrix a_;
  Vector dinv_;
  int sweeps_;
  SpectrumBounds bounds_;
};

int parse_count(std::string_view text, std::string_view what) {
  int value = 0;
  const auto* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, value);
  if (res.ec != std::errc() || res.ptr != end || value < 1) {
    throw ConfigError("inner solver: invalid sweep count '" + std::string(text) + "' for " + std::string(what));
  }
  return value;
}

}  // namespace

InnerSolverSpec parse_inner_solver(std::string_view text) {
  InnerSolverSpec spec;
  const auto colon = text.find(':');
  const std::string_view name = text.substr(0, colon);
  const std::string_view arg = colon == std::string_view::npos ? std::string_view{} : text.substr(colon + 1);
  if (name == "direct") {
    spec.kind = InnerKind::DirectLU;
  } else if (name == "ilu0") {
    spec.kind = InnerKind::ILU0;
  } else if (name == "jacobi") {
    spec.kind = InnerKind::Jacobi;
    spec.sweeps = arg.empty() ? 1 : parse_count(arg, name);
    return spec;
  } else if (name == "chebyshev") {
    spec.kind = InnerKind::Chebyshev;
    spec.sweeps = arg.empty() ? 1 : parse_count(arg, name);
    return spec;
  } else {
    throw ConfigError("unknown inner solver '" + std::string(text) + "'");
  }
  if (!arg.empty()) throw ConfigError("inner solver '" + std::string(name) + "' takes no argument");
  return spec;
}

std::string to_string(const InnerSolverSpec& spec) {
  switch (spec.kind) {
    case InnerKind::DirectLU: return "direct";
    case InnerKind::ILU0: return "ilu0";
    case InnerKind::Jacobi: return "jacobi:" + std::to_string(spec.sweeps);
    case InnerKind::Chebyshev: return "chebyshev:" + std::to_string(spec.sweeps);
  }
  return "unknown";
}

std::shared_ptr<const InnerSolver> make_inner_solver(const SparseMatrix& a, const InnerSolverSpec& spec) {
  if (!a.is_square()) throw ShapeError("inner solver: matrix is not square");
  switch (spec.kind) {
    case InnerKind::DirectLU: return std::make_shared<DirectLuSolver>(a);
    case InnerKind::ILU0: return std::make_shared<Ilu0Solver>(a);
    case InnerKind::Jacobi: return std::make_shared<JacobiSolver>(a, spec.sweeps, spec.damping);
    case InnerKind::Chebyshev: return std::make_shared<ChebyshevSolver>(a, spec.sweeps);
  }
  throw ConfigError("inner solver: unsupported kind");
}

SpectrumBounds estimate_chebyshev_bounds(const SparseMatrix& a, int iterations) {
  const Index n = a.rows();
  const Vector dinv = diag_inverse(a);
  std::mt19937 rng(20240917u);
  std::uniform_real_distribution<double> dist(0.5, 1.5);
  Vector x(static_cast<std::size_t>(n));
  for (double& v : x) v = dist(rng);
  Vector y(static_cast<std::size_t>(n));
  double lambda = 0.0;
  for (int it = 0; it < iterations; ++it) {
    const double nx = norm2(x);
    if (nx == 0.0) break;
    for (double& v : x) v /= nx;
    a.multiply(x, y);
    for (Index i = 0; i < n; ++i) y[i] *= dinv[i];
    lambda = dot(x, y);
    x.swap(y);
  }
  if (!(lambda > 0.0)) lambda = norm2(x);
  SpectrumBounds b;
  b.lambda_max = 1.1 * lambda;
  b.lambda_min = b.lambda_max / 30.0;
  return b;
}

}  // namespace dflow
