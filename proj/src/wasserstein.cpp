#include "dsc/wasserstein.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dsc {

double evaluate(const QuantileFn& fn, double q) {
  if (const auto* e = std::get_if<EmpiricalQuantileFn>(&fn)) return (*e)(q);
  return analytic_quantile(std::get<AnalyticDistribution>(fn), q);
}

std::vector<double> midpoint_grid(std::size_t points) {
  if (points == 0) throw std::invalid_argument("midpoint_grid: need at least one point");
  std::vector<double> q(points);
  const double g = static_cast<double>(points);
  for (std::size_t i = 0; i < points; ++i) q[i] = (static_cast<double>(i) + 0.5) / g;
  return q;
}

GridEvaluator::GridEvaluator(std::vector<double> levels) : levels_(std::move(levels)) {
  standard_normal_.reserve(levels_.size());
  for (double q : levels_) standard_normal_.push_back(normal_quantile(q));
}

void GridEvaluator::evaluate(const QuantileFn& fn, std::span<double> out) const {
  if (out.size() != levels_.size()) throw std::invalid_argument("GridEvaluator: output size mismatch");
  if (const auto* e = std::get_if<EmpiricalQuantileFn>(&fn)) {
    for (std::size_t i = 0; i < levels_.size(); ++i) out[i] = (*e)(levels_[i]);
    return;
  }
  const auto& dist = std::get<AnalyticDistribution>(fn);
  validate(dist);
  if (const auto* n = std::get_if<Normal>(&dist)) {
    for (std::size_t i = 0; i < levels_.size(); ++i) out[i] = n->mu + n->sigma * standard_normal_[i];
    return;
  }
  const double df = std::get<ChiSquare>(dist).df;
  for (std::size_t i = 0; i < levels_.size(); ++i) out[i] = chi_square_quantile(levels_[i], df);
}

std::vector<double> GridEvaluator::evaluate(const QuantileFn& fn) const {
  std::vector<double> out(levels_.size());
  evaluate(fn, out);
  return out;
}

double w2_grid(const QuantileFn& a, const QuantileFn& b, std::size_t grid_points) {
  if (grid_points == 0) throw std::invalid_argument("w2_grid: need at least one grid point");
  const GridEvaluator grid(midpoint_grid(grid_points));
  const auto va = grid.evaluate(a);
  const auto vb = grid.evaluate(b);
  double sum = 0.0;
  for (std::size_t i = 0; i < va.size(); ++i) {
    const double d = va[i] - vb[i];
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(grid_points));
}

double w2_empirical_equal_n(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("w2_empirical_equal_n: samples differ in length");
  if (x.empty()) throw std::invalid_argument("w2_empirical_equal_n: empty samples");
  std::vector<double> xs(x.begin(), x.end());
  std::vector<double> ys(y.begin(), y.end());
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double d = xs[i] - ys[i];
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(xs.size()));
}

double w2_sq_mc(const QuantileFn& a, const QuantileFn& b, const UniformDrawSequence& draws) {
  if (draws.values.empty()) throw std::invalid_argument("w2_sq_mc: no draws");
  double sum = 0.0;
  for (double v : draws.values) {
    const double d = evaluate(a, v) - evaluate(b, v);
    sum += d * d;
  }
  return sum / static_cast<double>(draws.values.size());
}

}  // namespace dsc
