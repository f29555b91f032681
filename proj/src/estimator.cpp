#include "dsc/estimator.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <stdexcept>
#include <string>

#include "dsc/errors.hpp"
#include "dsc/quantile.hpp"

namespace dsc {
namespace {

void require_post_period(const PanelDataset& panel, int t) {
  if (!panel.is_post_period(t)) {
    throw std::invalid_argument("period " + std::to_string(t) + " is not a post-treatment period");
  }
}

void require_fit_matches(const DscFit& fit, const PanelDataset& panel) {
  if (fit.aggregated.size() != panel.num_controls()) {
    throw std::invalid_argument("fit and panel disagree on the number of controls");
  }
}

}  // namespace

PeriodFit fit_period_weights(const PanelDataset& panel, int t, const UniformDrawSequence& draws,
                             const SolverOptions& options) {
  if (!panel.is_pre_period(t)) {
    throw std::invalid_argument("period " + std::to_string(t) + " is not a pre-treatment period");
  }
  const auto M = static_cast<Eigen::Index>(draws.values.size());
  const auto J = static_cast<Eigen::Index>(panel.num_controls());
  if (M == 0) throw std::invalid_argument("fit_period_weights: no draws");

  Eigen::VectorXd target(M);
  Eigen::MatrixXd design(M, J);
  for (std::size_t u = 0; u < panel.num_units(); ++u) {
    const auto fn = EmpiricalQuantileFn::fit(panel.cell(u, t));
    const auto sample = build_artificial_sample(fn, draws);
    if (u == 0) {
      target = Eigen::Map<const Eigen::VectorXd>(sample.data(), M);
    } else {
      design.col(static_cast<Eigen::Index>(u - 1)) = Eigen::Map<const Eigen::VectorXd>(sample.data(), M);
    }
  }

  auto report = solve_simplex_ls(design, target, options);
  return PeriodFit{report.weights, report.objective, std::move(report)};
}

SimplexWeights aggregate_weights(std::span<const SimplexWeights> per_period, std::span<const double> lambdas) {
  if (per_period.empty() || per_period.size() != lambdas.size()) {
    throw std::invalid_argument("aggregate_weights: one lambda per period required");
  }
  validate_lambdas(lambdas);
  const std::size_t J = per_period.front().size();
  std::vector<double> out(J, 0.0);
  for (std::size_t t = 0; t < per_period.size(); ++t) {
    if (per_period[t].size() != J) throw std::invalid_argument("aggregate_weights: weight lengths differ");
    for (std::size_t j = 0; j < J; ++j) out[j] += lambdas[t] * per_period[t][j];
  }
  return SimplexWeights(std::move(out));
}

DscFit fit_dsc(const PanelDataset& panel, const EstimationConfig& config) {
  const std::size_t M = resolve_M(config, min_group_size(panel));
  const int t0 = panel.t0();

  std::vector<double> lambdas;
  if (config.lambdas) {
    lambdas = *config.lambdas;
    if (lambdas.size() != static_cast<std::size_t>(t0)) {
      throw std::invalid_argument("expected " + std::to_string(t0) + " lambda weights, got " +
                                  std::to_string(lambdas.size()));
    }
    validate_lambdas(lambdas);
  } else {
    lambdas.assign(static_cast<std::size_t>(t0), 1.0 / static_cast<double>(t0));
  }

  const auto draws = draw_uniforms(M, config.draw_mode, config.seed);
  const SolverOptions options{config.tol, config.max_iter};

  std::vector<int> periods;
  std::vector<SimplexWeights> weights;
  std::vector<double> losses;
  bool converged = true;
  for (int t = 1; t <= t0; ++t) {
    auto period = fit_period_weights(panel, t, draws, options);
    periods.push_back(t);
    weights.push_back(period.weights);
    losses.push_back(period.loss);
    converged = converged && period.report.converged;
  }

  auto aggregated = aggregate_weights(weights, lambdas);
  return DscFit{std::move(periods), std::move(weights), std::move(lambdas), std::move(aggregated),
                std::move(losses),  M,                    config.seed,       converged};
}

double counterfactual_quantile(const DscFit& fit, const PanelDataset& panel, int t, double q) {
  require_post_period(panel, t);
  require_fit_matches(fit, panel);
  if (!(q > 0.0 && q < 1.0)) throw std::domain_error("counterfactual_quantile: level must lie in (0,1)");
  double value = 0.0;
  for (std::size_t j = 0; j < panel.num_controls(); ++j) {
    const double w = fit.aggregated[j];
    if (w == 0.0) continue;
    value += w * EmpiricalQuantileFn::fit(panel.cell(j + 1, t))(q);
  }
  return value;
}

QteCurve qte_curve(const DscFit& fit, const PanelDataset& panel, int t, std::span<const double> grid) {
  require_post_period(panel, t);
  require_fit_matches(fit, panel);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0.0 && grid[i] < 1.0)) throw std::domain_error("qte_curve: levels must lie in (0,1)");
    if (i > 0 && !(grid[i] > grid[i - 1])) throw std::invalid_argument("qte_curve: grid must be strictly increasing");
  }

  QteCurve curve{t, std::vector<double>(grid.begin(), grid.end()), std::vector<double>(grid.size(), 0.0)};
  const auto treated = EmpiricalQuantileFn::fit(panel.cell(0, t));
  for (std::size_t i = 0; i < grid.size(); ++i) curve.values[i] = treated(grid[i]);
  for (std::size_t j = 0; j < panel.num_controls(); ++j) {
    const double w = fit.aggregated[j];
    if (w == 0.0) continue;
    const auto control = EmpiricalQuantileFn::fit(panel.cell(j + 1, t));
    for (std::size_t i = 0; i < grid.size(); ++i) curve.values[i] -= w * control(grid[i]);
  }
  return curve;
}

std::vector<double> default_qte_grid(std::size_t points) {
  if (points == 0) throw std::invalid_argument("QTE grid needs at least one level");
  std::vector<double> grid(points);
  for (std::size_t i = 0; i < points; ++i) {
    grid[i] = static_cast<double>(i + 1) / static_cast<double>(points + 1);
  }
  return grid;
}

nlohmann::json fit_to_json(const DscFit& fit, const PanelDataset& panel) {
  nlohmann::json doc;
  doc["controls"] = std::vector<int>(panel.unit_ids().begin() + 1, panel.unit_ids().end());
  doc["weights"] = fit.aggregated.values();
  nlohmann::json per_period = nlohmann::json::object();
  nlohmann::json losses = nlohmann::json::object();
  for (std::size_t i = 0; i < fit.pre_periods.size(); ++i) {
    const auto key = std::to_string(fit.pre_periods[i]);
    per_period[key] = fit.per_period_weights[i].values();
    losses[key] = fit.per_period_loss[i];
  }
  doc["per_period_weights"] = std::move(per_period);
  doc["lambdas"] = fit.lambdas;
  doc["per_period_loss"] = std::move(losses);
  doc["M"] = fit.draws;
  doc["seed"] = fit.seed;
  return doc;
}

void write_fit_json(const DscFit& fit, const PanelDataset& panel, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << fit_to_json(fit, panel).dump(2) << '\n';
}

void write_qte_csv(std::span<const QteCurve> curves, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << "t,q,qte\n" << std::setprecision(17);
  for (const auto& c : curves) {
    for (std::size_t i = 0; i < c.levels.size(); ++i) out << c.period << ',' << c.levels[i] << ',' << c.values[i] << '\n';
  }
}

}  // namespace dsc
