#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace dsc {

/// A point of the unit simplex: nonnegative entries summing to one.
class SimplexWeights {
 public:
  /// Validates nonnegativity and |sum - 1| <= 1e-12; throws std::invalid_argument.
  explicit SimplexWeights(std::vector<double> values);

  static SimplexWeights uniform(std::size_t size);
  /// The j-th vertex e_j (zero-based).
  static SimplexWeights vertex(std::size_t size, std::size_t j);

  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t j) const { return values_[j]; }
  const std::vector<double>& values() const { return values_; }
  Eigen::Map<const Eigen::VectorXd> vector() const {
    return {values_.data(), static_cast<Eigen::Index>(values_.size())};
  }

  friend bool operator==(const SimplexWeights&, const SimplexWeights&) = default;

 private:
  std::vector<double> values_;
};

/// Euclidean projection onto the unit simplex (sort-and-threshold).
/// Throws std::invalid_argument on empty or non-finite input.
SimplexWeights project_to_simplex(std::span<const double> v);

struct SolverOptions {
  double tol = 1e-10;  ///< Target KKT residual.
  int max_iter = 50000;
  bool record_trace = false;  ///< Keep the per-iteration objective in SolveReport::trace.
};

struct SolveReport {
  SimplexWeights weights;
  double objective = 0.0;  ///< (1/M) ||X w - y||^2
  int iterations = 0;
  double kkt_residual = 0.0;
  bool converged = false;
  std::vector<double> trace;  ///< Objective after each iteration, when requested.
};

/// Minimizes (1/M) ||X w - y||^2 over the unit simplex.
///
/// Accelerated projected gradient (step 1/L, L = 2 lambda_max(X'X)/M from
/// power iteration) with a function-value restart, so accepted iterates never
/// increase the objective. Once a support is identified, the equality-
/// constrained problem on that support is solved directly and kept when it
/// improves the certificate. Starts from uniform weights. When max_iter is
/// hit the best iterate is returned with converged = false.
///
/// Throws std::invalid_argument on empty, mismatched or non-finite input.
SolveReport solve_simplex_ls(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const SolverOptions& options = {});

/// Violation of the simplex KKT conditions for gradient g = (2/M) X'(Xw - y):
/// with mu the smallest g_j over the support, the largest of g_j - mu on the
/// support and mu - g_j off it. Zero exactly at a minimizer.
double kkt_residual(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const SimplexWeights& w);

/// Same certificate from a precomputed gradient.
double kkt_residual_from_gradient(std::span<const double> gradient, std::span<const double> w);

/// (1/M) ||X w - y||^2, summed in row order.
double mean_squared_residual(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::span<const double> w);

}  // namespace dsc
