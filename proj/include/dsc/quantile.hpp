#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dsc/random.hpp"

namespace dsc {

/// Empirical quantile function of a sample, realized as order statistics.
///
/// Evaluation at q returns the k-th smallest observation with k = ceil(q * n),
/// so q in ((k-1)/n, k/n] maps to the k-th order statistic. No interpolation.
class EmpiricalQuantileFn {
 public:
  /// Throws std::invalid_argument on an empty sample or a non-finite value.
  static EmpiricalQuantileFn fit(std::span<const double> sample);

  /// Throws std::domain_error unless 0 < q < 1.
  double operator()(double q) const { return sorted_[order_index(q, sorted_.size())]; }

  std::span<const double> sorted_sample() const { return sorted_; }
  std::size_t size() const { return sorted_.size(); }

  /// Zero-based order-statistic index k - 1 for level q in a sample of size n.
  static std::size_t order_index(double q, std::size_t n);

 private:
  explicit EmpiricalQuantileFn(std::vector<double> sorted) : sorted_(std::move(sorted)) {}

  std::vector<double> sorted_;
};

/// Artificial sample: element m is fn(draws.values[m]).
std::vector<double> build_artificial_sample(const EmpiricalQuantileFn& fn, const UniformDrawSequence& draws);

}  // namespace dsc
