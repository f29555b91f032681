#include "dsc/quantile.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace dsc {

EmpiricalQuantileFn EmpiricalQuantileFn::fit(std::span<const double> sample) {
  if (sample.empty()) throw std::invalid_argument("empirical quantile: empty sample");
  std::vector<double> sorted(sample.begin(), sample.end());
  for (double v : sorted) {
    if (!std::isfinite(v)) throw std::invalid_argument("empirical quantile: non-finite observation");
  }
  std::sort(sorted.begin(), sorted.end());
  return EmpiricalQuantileFn(std::move(sorted));
}

std::size_t EmpiricalQuantileFn::order_index(double q, std::size_t n) {
  if (!(q > 0.0 && q < 1.0)) {
    throw std::domain_error("empirical quantile: level must lie in (0,1), got " + std::to_string(q));
  }
  double x = q * static_cast<double>(n);
  // q = k/n is rarely exact in binary; a product within a few ulps of an
  // integer is treated as that integer so the boundary goes to index k.
  if (const double r = std::nearbyint(x); std::fabs(x - r) <= 8.0 * std::numeric_limits<double>::epsilon() * r) {
    x = r;
  }
  const auto k = static_cast<std::size_t>(std::ceil(x));
  return std::clamp<std::size_t>(k, 1, n) - 1;
}

std::vector<double> build_artificial_sample(const EmpiricalQuantileFn& fn, const UniformDrawSequence& draws) {
  std::vector<double> out;
  out.reserve(draws.values.size());
  for (double v : draws.values) out.push_back(fn(v));
  return out;
}

}  // namespace dsc
