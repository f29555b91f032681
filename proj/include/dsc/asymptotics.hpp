#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "dsc/estimator.hpp"
#include "dsc/panel.hpp"
#include "dsc/random.hpp"
#include "dsc/simplex_qp.hpp"
#include "dsc/wasserstein.hpp"

namespace dsc {

/// True (or high-accuracy) quantile functions of every unit in every
/// post-treatment period, plus the integration grid size.
struct OracleSpec {
  /// post_periods[t][u]: unit u (0 = treated) in the t-th post period.
  std::vector<std::vector<QuantileFn>> post_periods;
  std::size_t grid_points = 10000;

  std::size_t num_controls() const { return post_periods.front().size() - 1; }
};

/// The oracle's quantile functions evaluated on the midpoint grid and stacked
/// over post periods: R(w) = (1/(G T1)) ||design w - target||^2.
struct OracleDesign {
  Eigen::MatrixXd design;
  Eigen::VectorXd target;
};

/// Throws std::invalid_argument when the oracle is empty or ragged.
OracleDesign stack_oracle(const OracleSpec& oracle);

/// Average over post periods of the squared W2 distance between the
/// w-mixture of control quantiles and the treated quantile.
double post_treatment_risk(const SimplexWeights& w, const OracleSpec& oracle);
double post_treatment_risk(const SimplexWeights& w, const OracleDesign& design);

/// Minimizer of the post-treatment risk over the simplex, on the same grid.
SolveReport optimal_weights(const OracleSpec& oracle, const SolverOptions& options = {});
SolveReport optimal_weights(const OracleDesign& design, const SolverOptions& options = {});

/// Risk ratio of fitted against optimal weights. A zero optimal risk makes
/// the ratio meaningless; that case is reported as a separate status.
struct OptimalityRatio {
  enum class Status { Ok, ZeroOptimalRisk };
  Status status = Status::Ok;
  double value = 0.0;  ///< valid only when status == Ok
  double risk_at_fit = 0.0;
  double risk_at_opt = 0.0;

  bool ok() const { return status == Status::Ok; }
};

/// Risks below this are treated as an exact post-treatment fit.
inline constexpr double kZeroRiskThreshold = 1e-14;

OptimalityRatio optimality_ratio(const SimplexWeights& fitted, const OracleSpec& oracle,
                                 const SolverOptions& options = {});
OptimalityRatio optimality_ratio(const DscFit& fit, const OracleSpec& oracle, const SolverOptions& options = {});

double weight_distance(const SimplexWeights& a, const SimplexWeights& b);
double weight_distance(const DscFit& fit, const OracleSpec& oracle, const SolverOptions& options = {});

struct FitDiagnostics {
  std::vector<int> periods;
  std::vector<double> xi_hat;     ///< minimized per-period loss
  std::vector<bool> perfect_fit;  ///< xi_hat below kPerfectFitThreshold
  double xi_bar_hat = 0.0;        ///< lambda-weighted average of xi_hat
};

inline constexpr double kPerfectFitThreshold = 1e-12;

FitDiagnostics pretreatment_fit_diagnostics(const DscFit& fit);

struct EigenRange {
  double min = 0.0;
  double max = 0.0;
};

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
std::vector<double> symmetric_eigenvalues(const Eigen::MatrixXd& A, double tol = 1e-13);

/// Extreme eigenvalues of M^{-1} X'X for the period-t artificial-sample design.
EigenRange design_eigen_diagnostic(const PanelDataset& panel, const UniformDrawSequence& draws, int t);

/// Everything the simulation records for one fitted replication.
struct ConvergenceReport {
  OptimalityRatio ratio;
  double weight_distance = 0.0;
  SimplexWeights optimal;
  FitDiagnostics fit_diagnostics;
};

ConvergenceReport evaluate_convergence(const DscFit& fit, const OracleSpec& oracle,
                                       const SolverOptions& options = {});

}  // namespace dsc
