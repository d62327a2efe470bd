#include "dflow/vector.hpp"

#include <cmath>
#include <string>

#include "dflow/errors.hpp"

namespace dflow {

namespace {

void check_lengths(std::size_t a, std::size_t b, const char* op) {
  if (a != b) {
    throw ShapeError(std::string(op) + ": length mismatch (" + std::to_string(a) + " vs " +
                     std::to_string(b) + ")");
  }
}

}  // namespace

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  check_lengths(x.size(), y.size(), "axpy");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

double dot(std::span<const double> x, std::span<const double> y) {
  check_lengths(x.size(), y.size(), "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

double norm2(std::span<const double> x) {
  // scaled accumulation avoids overflow for very large entries
  double scale = 0.0;
  double ssq = 1.0;
  for (double v : x) {
    if (v == 0.0) continue;
    const double a = std::abs(v);
    if (scale < a) {
      ssq = 1.0 + ssq * (scale / a) * (scale / a);
      scale = a;
    } else {
      ssq += (a / scale) * (a / scale);
    }
  }
  return scale * std::sqrt(ssq);
}

double norm_inf(std::span<const double> x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v));
  return m;
}

MonolithicVector::MonolithicVector(Index nu, Index np, Index m)
    : nu_(nu), np_(np), m_(m), data_(static_cast<std::size_t>(nu + np + m), 0.0) {
  if (nu < 0 || np < 0 || m < 0) throw ShapeError("MonolithicVector: negative partition size");
}

MonolithicVector::MonolithicVector(Index nu, Index np, Index m, Vector data)
    : nu_(nu), np_(np), m_(m), data_(std::move(data)) {
  if (nu < 0 || np < 0 || m < 0) throw ShapeError("MonolithicVector: negative partition size");
  check_lengths(data_.size(), static_cast<std::size_t>(nu + np + m), "MonolithicVector");
}

}  // namespace dflow
