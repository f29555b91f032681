#pragma once

#include <cstddef>
#include <span>
#include <variant>
#include <vector>

#include "dsc/distributions.hpp"
#include "dsc/quantile.hpp"
#include "dsc/random.hpp"

namespace dsc {

/// A one-dimensional law represented by its quantile function.
using QuantileFn = std::variant<EmpiricalQuantileFn, AnalyticDistribution>;

double evaluate(const QuantileFn& fn, double q);

/// Midpoint levels (i - 0.5) / G, i = 1..G.
std::vector<double> midpoint_grid(std::size_t points);

/// Evaluates many quantile functions on one fixed grid. Standard normal
/// quantiles are computed once and reused for every Normal law.
class GridEvaluator {
 public:
  explicit GridEvaluator(std::vector<double> levels);

  const std::vector<double>& levels() const { return levels_; }
  std::size_t size() const { return levels_.size(); }

  /// Writes fn(levels[i]) into out[i]; out.size() must equal size().
  void evaluate(const QuantileFn& fn, std::span<double> out) const;
  std::vector<double> evaluate(const QuantileFn& fn) const;

 private:
  std::vector<double> levels_;
  std::vector<double> standard_normal_;
};

/// W2 via the midpoint rule on G levels.
double w2_grid(const QuantileFn& a, const QuantileFn& b, std::size_t grid_points = 10000);

/// Exact W2 between two equal-size empirical measures (sorted pairing).
/// Throws std::invalid_argument on a length mismatch or empty input.
double w2_empirical_equal_n(std::span<const double> x, std::span<const double> y);

/// Monte Carlo squared distance (1/M) sum_m (a(V_m) - b(V_m))^2.
double w2_sq_mc(const QuantileFn& a, const QuantileFn& b, const UniformDrawSequence& draws);

}  // namespace dsc
