#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace dsc {

/// SplitMix64 finalizer; a bijection on 64-bit words.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Derives an independent stream seed from a parent seed and a path of keys.
/// The result depends only on the arguments, never on call order.
std::uint64_t derive_seed(std::uint64_t parent, std::initializer_list<std::uint64_t> keys) noexcept;

/// Value-semantic random source. Output is bit-identical across platforms:
/// the engine is std::mt19937_64 (fully specified by the standard) and all
/// transforms to real variates are implemented here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on the open interval (0,1), 53-bit resolution.
  double uniform() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal variate (Marsaglia polar method).
  double normal();

  double normal(double mu, double sigma) { return mu + sigma * normal(); }

  /// Gamma(shape, 1) variate (Marsaglia-Tsang).
  double gamma(double shape);

  double chi_square(double df) { return 2.0 * gamma(0.5 * df); }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Dependence structure of the uniform draw sequence.
struct DrawMode {
  enum class Kind { Iid, Ar1 };
  Kind kind = Kind::Iid;
  double rho = 0.0;  ///< AR(1) coefficient, only used when kind == Ar1.

  static DrawMode iid() { return {}; }
  static DrawMode ar1(double rho) { return {Kind::Ar1, rho}; }
};

struct UniformDrawSequence {
  std::vector<double> values;  ///< Each strictly inside (0,1).
  DrawMode mode;
  std::uint64_t seed = 0;
};

/// M uniform draws. Ar1 mode runs a stationary unit-variance Gaussian AR(1)
/// and maps it through the normal CDF, so marginals stay U(0,1).
UniformDrawSequence draw_uniforms(std::size_t count, DrawMode mode, std::uint64_t seed);

}  // namespace dsc
