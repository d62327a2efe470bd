#ifndef DFLOW_VECTOR_HPP
#define DFLOW_VECTOR_HPP

#include <cstdint>
#include <span>
#include <vector>

namespace dflow {

using Index = std::int32_t;
using Vector = std::vector<double>;

/// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);
double dot(std::span<const double> x, std::span<const double> y);
double norm2(std::span<const double> x);
double norm_inf(std::span<const double> x);

/// Storage for (U, P, Lambda) laid out contiguously as [u | p | lambda].
///
/// The partition sizes are fixed at construction; views into the three parts
/// remain valid for the lifetime of the object.
class MonolithicVector {
 public:
  MonolithicVector() = default;
  MonolithicVector(Index nu, Index np, Index m);
  /// Takes ownership of `data`, which must have length nu + np + m.
  MonolithicVector(Index nu, Index np, Index m, Vector data);

  Index nu() const { return nu_; }
  Index np() const { return np_; }
  Index m() const { return m_; }
  Index size() const { return static_cast<Index>(data_.size()); }

  std::span<double> u() { return {data_.data(), static_cast<std::size_t>(nu_)}; }
  std::span<double> p() { return {data_.data() + nu_, static_cast<std::size_t>(np_)}; }
  std::span<double> lambda() { return {data_.data() + nu_ + np_, static_cast<std::size_t>(m_)}; }
  std::span<const double> u() const { return {data_.data(), static_cast<std::size_t>(nu_)}; }
  std::span<const double> p() const { return {data_.data() + nu_, static_cast<std::size_t>(np_)}; }
  std::span<const double> lambda() const {
    return {data_.data() + nu_ + np_, static_cast<std::size_t>(m_)};
  }

  std::span<double> all() { return data_; }
  std::span<const double> all() const { return data_; }
  const Vector& data() const { return data_; }

 private:
  Index nu_ = 0;
  Index np_ = 0;
  Index m_ = 0;
  Vector data_;
};

}  // namespace dflow

#endif  // DFLOW_VECTOR_HPP
