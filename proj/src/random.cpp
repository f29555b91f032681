#include "dsc/random.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dsc/distributions.hpp"

namespace dsc {

std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t parent, std::initializer_list<std::uint64_t> keys) noexcept {
  std::uint64_t h = mix64(parent);
  for (std::uint64_t k : keys) h = mix64(h ^ mix64(k + 0x632be59bd9b4e019ULL));
  return h;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * f;
  has_spare_ = true;
  return u * f;
}

double Rng::gamma(double shape) {
  if (!(shape > 0.0)) throw std::invalid_argument("Rng::gamma: shape must be positive");
  if (shape < 1.0) {
    // Boost to shape + 1 and rescale.
    const double g = gamma(shape + 1.0);
    return g * std::pow(uniform(), 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

UniformDrawSequence draw_uniforms(std::size_t count, DrawMode mode, std::uint64_t seed) {
  if (count == 0) throw std::invalid_argument("draw_uniforms: need at least one draw");
  if (mode.kind == DrawMode::Kind::Ar1 && !(std::fabs(mode.rho) < 1.0)) {
    throw std::invalid_argument("draw_uniforms: AR(1) coefficient must satisfy |rho| < 1");
  }

  UniformDrawSequence out{std::vector<double>(count), mode, seed};
  Rng rng(seed);
  if (mode.kind == DrawMode::Kind::Iid) {
    for (double& v : out.values) v = rng.uniform();
    return out;
  }

  // Stationary start, innovations scaled to keep unit variance.
  constexpr double lo = 0x1.0p-60;
  constexpr double hi = 1.0 - 0x1.0p-53;
  const double innovation_sd = std::sqrt(1.0 - mode.rho * mode.rho);
  double x = rng.normal();
  for (std::size_t m = 0; m < count; ++m) {
    if (m > 0) x = mode.rho * x + innovation_sd * rng.normal();
    out.values[m] = std::clamp(normal_cdf(x), lo, hi);
  }
  return out;
}

}  // namespace dsc
