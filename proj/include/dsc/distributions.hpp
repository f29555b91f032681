#pragma once

#include <variant>

namespace dsc {

struct Normal {
  double mu = 0.0;
  double sigma = 1.0;
};

struct ChiSquare {
  double df = 1.0;
};

/// Closed-form families used as ground truth by the simulation oracles.
using AnalyticDistribution = std::variant<Normal, ChiSquare>;

/// Standard normal CDF.
double normal_cdf(double x);

/// Inverse of the standard normal CDF. Throws std::domain_error unless 0 < q < 1.
double normal_quantile(double q);

/// Regularized lower incomplete gamma function P(a, x).
double regularized_gamma_p(double a, double x);

double chi_square_cdf(double x, double df);

/// Inverse of the chi-square CDF with `df` degrees of freedom.
double chi_square_quantile(double q, double df);

/// Quantile function of `dist` at level q in (0,1).
double analytic_quantile(const AnalyticDistribution& dist, double q);

/// Throws std::invalid_argument when the parameters are out of range.
void validate(const AnalyticDistribution& dist);

}  // namespace dsc
