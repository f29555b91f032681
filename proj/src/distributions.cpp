#include "dsc/distributions.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace dsc {
namespace {

void require_open_unit(double q, const char* who) {
  if (!(q > 0.0 && q < 1.0)) {
    throw std::domain_error(std::string(who) + ": level must lie in (0,1), got " + std::to_string(q));
  }
}

// Acklam's rational approximation, relative error about 1.2e-9. Valid for q <= 0.5.
double acklam_lower(double q) {
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01,  -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  if (q < p_low) {
    const double r = std::sqrt(-2.0 * std::log(q));
    return (((((c[0] * r + c[1]) * r + c[2]) * r + c[3]) * r + c[4]) * r + c[5]) /
           ((((d[0] * r + d[1]) * r + d[2]) * r + d[3]) * r + 1.0);
  }
  const double s = q - 0.5;
  const double r = s * s;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * s /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

double log_chi_square_pdf(double x, double df) {
  const double a = 0.5 * df;
  return (a - 1.0) * std::log(x) - 0.5 * x - a * std::numbers::ln2 - std::lgamma(a);
}

// Series expansion of P(a, x); converges quickly for x < a + 1.
double gamma_p_series(double a, double x) {
  double ap = a;
  double term = 1.0 / a;
  double sum = term;
  for (int n = 0; n < 10000; ++n) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::fabs(term) < std::fabs(sum) * 1e-17) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Continued fraction for Q(a, x) (modified Lentz); used for x >= a + 1.
double gamma_q_fraction(double a, double x) {
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 10000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < 1e-16) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

double regularized_gamma_q(double a, double x) {
  if (x <= 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
  return gamma_q_fraction(a, x);
}

}  // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_quantile(double q) {
  require_open_unit(q, "normal_quantile");
  if (q > 0.5) return -normal_quantile(1.0 - q);  // 1 - q is exact here
  if (q == 0.5) return 0.0;

  double x = acklam_lower(q);
  // One Halley step on the CDF.
  const double e = normal_cdf(x) - q;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  x -= u / (1.0 + 0.5 * x * u);
  return x;
}

double regularized_gamma_p(double a, double x) {
  if (!(a > 0.0)) throw std::domain_error("regularized_gamma_p: shape must be positive");
  if (x <= 0.0) return 0.0;
  if (x < a + 1.0) return gamma_p_series(a, x);
  return 1.0 - gamma_q_fraction(a, x);
}

double chi_square_cdf(double x, double df) {
  if (!(df > 0.0)) throw std::domain_error("chi_square_cdf: df must be positive");
  return regularized_gamma_p(0.5 * df, 0.5 * x);
}

double chi_square_quantile(double q, double df) {
  require_open_unit(q, "chi_square_quantile");
  if (!(df > 0.0) || !std::isfinite(df)) throw std::domain_error("chi_square_quantile: df must be positive");

  const double a = 0.5 * df;
  // Work on whichever tail keeps the target free of cancellation.
  const bool upper = q > 0.5;
  const double target = upper ? 1.0 - q : q;
  auto residual = [&](double x) {
    return upper ? target - regularized_gamma_q(a, 0.5 * x) : regularized_gamma_p(a, 0.5 * x) - target;
  };

  // Wilson-Hilferty start, with a small-x power law when it goes non-positive.
  const double h = 2.0 / (9.0 * df);
  double x = df * std::pow(1.0 - h + normal_quantile(q) * std::sqrt(h), 3);
  if (!(x > 0.0)) x = 2.0 * std::exp((std::log(q) + std::lgamma(a + 1.0)) / a);

  double lo = 0.0;
  double hi = std::max(2.0 * x, df + 10.0);
  while (residual(hi) < 0.0) hi *= 2.0;

  for (int iter = 0; iter < 300; ++iter) {
    const double r = residual(x);
    if (r == 0.0) return x;
    if (r < 0.0) lo = x; else hi = x;

    const double pdf = std::exp(log_chi_square_pdf(x, df));
    double next = (pdf > 0.0 && std::isfinite(pdf)) ? x - r / pdf : lo - 1.0;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);  // bisection fallback

    const double step = std::fabs(next - x);
    x = next;
    if (step <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, x)) break;
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, hi)) break;
  }
  return x;
}

double analytic_quantile(const AnalyticDistribution& dist, double q) {
  validate(dist);
  if (const auto* n = std::get_if<Normal>(&dist)) {
    return n->mu + n->sigma * normal_quantile(q);
  }
  return chi_square_quantile(q, std::get<ChiSquare>(dist).df);
}

void validate(const AnalyticDistribution& dist) {
  if (const auto* n = std::get_if<Normal>(&dist)) {
    if (!(n->sigma > 0.0) || !std::isfinite(n->sigma) || !std::isfinite(n->mu)) {
      throw std::invalid_argument("Normal: sigma must be positive and parameters finite");
    }
  } else if (!(std::get<ChiSquare>(dist).df > 0.0)) {
    throw std::invalid_argument("ChiSquare: df must be positive");
  }
}

}  // namespace dsc
