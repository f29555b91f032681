#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "dsc/panel.hpp"
#include "dsc/random.hpp"
#include "dsc/simplex_qp.hpp"

namespace dsc {

struct PeriodFit {
  SimplexWeights weights;
  double loss = 0.0;  ///< L_t at the fitted weights
  SolveReport report;
};

/// Fitted distributional synthetic control.
struct DscFit {
  std::vector<int> pre_periods;                  ///< 1..t0
  std::vector<SimplexWeights> per_period_weights;  ///< aligned with pre_periods
  std::vector<double> lambdas;                   ///< aligned with pre_periods
  SimplexWeights aggregated;                     ///< sum_t lambda_t * w_t
  std::vector<double> per_period_loss;           ///< aligned with pre_periods
  std::size_t draws = 0;                         ///< M actually used
  std::uint64_t seed = 0;
  bool converged = true;                         ///< every period solve certified

  friend bool operator==(const DscFit&, const DscFit&) = default;
};

struct QteCurve {
  int period = 0;
  std::vector<double> levels;
  std::vector<double> values;  ///< observed treated quantile minus counterfactual
};

/// Per-period weights: regresses the treated unit's artificial sample on the
/// controls' artificial samples, all evaluated at the same draws.
PeriodFit fit_period_weights(const PanelDataset& panel, int t, const UniformDrawSequence& draws,
                             const SolverOptions& options = {});

/// Convex combination sum_t lambda_t * w_t. Throws std::invalid_argument on
/// mismatched sizes or invalid lambdas.
SimplexWeights aggregate_weights(std::span<const SimplexWeights> per_period, std::span<const double> lambdas);

/// Full estimator: resolves M, draws one shared uniform sequence from the
/// configured seed, fits every pre-period and aggregates.
DscFit fit_dsc(const PanelDataset& panel, const EstimationConfig& config);

/// Weighted average of control empirical quantiles at q in post-period t.
double counterfactual_quantile(const DscFit& fit, const PanelDataset& panel, int t, double q);

/// Quantile treatment effects of post-period t on a strictly increasing grid in (0,1).
QteCurve qte_curve(const DscFit& fit, const PanelDataset& panel, int t, std::span<const double> grid);

/// Levels i / (points + 1), i = 1..points; 99 points gives 0.01..0.99.
std::vector<double> default_qte_grid(std::size_t points = 99);

nlohmann::json fit_to_json(const DscFit& fit, const PanelDataset& panel);
void write_fit_json(const DscFit& fit, const PanelDataset& panel, const std::filesystem::path& path);
/// CSV `t,q,qte`, one row per (period, level).
void write_qte_csv(std::span<const QteCurve> curves, const std::filesystem::path& path);

}  // namespace dsc
