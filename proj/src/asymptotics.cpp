#include "dsc/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "dsc/quantile.hpp"

namespace dsc {
namespace {

OptimalityRatio make_ratio(double risk_fit, double risk_opt) {
  OptimalityRatio r;
  r.risk_at_fit = risk_fit;
  r.risk_at_opt = risk_opt;
  if (risk_opt <= kZeroRiskThreshold) {
    r.status = OptimalityRatio::Status::ZeroOptimalRisk;
  } else {
    r.value = risk_fit / risk_opt;
  }
  return r;
}

}  // namespace

OracleDesign stack_oracle(const OracleSpec& oracle) {
  if (oracle.post_periods.empty()) throw std::invalid_argument("oracle: no post-treatment periods");
  if (oracle.grid_points == 0) throw std::invalid_argument("oracle: grid size must be positive");
  const std::size_t units = oracle.post_periods.front().size();
  if (units < 2) throw std::invalid_argument("oracle: needs the treated unit and at least one control");
  for (const auto& period : oracle.post_periods) {
    if (period.size() != units) throw std::invalid_argument("oracle: every period must cover every unit");
  }

  const GridEvaluator grid(midpoint_grid(oracle.grid_points));
  const auto G = static_cast<Eigen::Index>(oracle.grid_points);
  const auto periods = static_cast<Eigen::Index>(oracle.post_periods.size());
  const auto J = static_cast<Eigen::Index>(units - 1);

  OracleDesign out{Eigen::MatrixXd(G * periods, J), Eigen::VectorXd(G * periods)};
  std::vector<double> column(oracle.grid_points);
  for (Eigen::Index t = 0; t < periods; ++t) {
    const auto& fns = oracle.post_periods[static_cast<std::size_t>(t)];
    grid.evaluate(fns[0], column);
    out.target.segment(t * G, G) = Eigen::Map<const Eigen::VectorXd>(column.data(), G);
    for (Eigen::Index j = 0; j < J; ++j) {
      grid.evaluate(fns[static_cast<std::size_t>(j + 1)], column);
      out.design.block(t * G, j, G, 1) = Eigen::Map<const Eigen::VectorXd>(column.data(), G);
    }
  }
  return out;
}

double post_treatment_risk(const SimplexWeights& w, const OracleDesign& design) {
  if (static_cast<Eigen::Index>(w.size()) != design.design.cols()) {
    throw std::invalid_argument("post_treatment_risk: weight length does not match the oracle");
  }
  return mean_squared_residual(design.design, design.target, w.values());
}

double post_treatment_risk(const SimplexWeights& w, const OracleSpec& oracle) {
  return post_treatment_risk(w, stack_oracle(oracle));
}

SolveReport optimal_weights(const OracleDesign& design, const SolverOptions& options) {
  return solve_simplex_ls(design.design, design.target, options);
}

SolveReport optimal_weights(const OracleSpec& oracle, const SolverOptions& options) {
  return optimal_weights(stack_oracle(oracle), options);
}

OptimalityRatio optimality_ratio(const SimplexWeights& fitted, const OracleSpec& oracle,
                                 const SolverOptions& options) {
  const auto design = stack_oracle(oracle);
  const auto opt = optimal_weights(design, options);
  return make_ratio(post_treatment_risk(fitted, design), opt.objective);
}

OptimalityRatio optimality_ratio(const DscFit& fit, const OracleSpec& oracle, const SolverOptions& options) {
  return optimality_ratio(fit.aggregated, oracle, options);
}

double weight_distance(const SimplexWeights& a, const SimplexWeights& b) {
  if (a.size() != b.size()) throw std::invalid_argument("weight_distance: length mismatch");
  double sum = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = a[j] - b[j];
    sum += d * d;
  }
  return std::sqrt(sum);
}

double weight_distance(const DscFit& fit, const OracleSpec& oracle, const SolverOptions& options) {
  return weight_distance(fit.aggregated, optimal_weights(oracle, options).weights);
}

FitDiagnostics pretreatment_fit_diagnostics(const DscFit& fit) {
  FitDiagnostics d;
  d.periods = fit.pre_periods;
  d.xi_hat = fit.per_period_loss;
  for (std::size_t i = 0; i < d.xi_hat.size(); ++i) {
    d.perfect_fit.push_back(d.xi_hat[i] < kPerfectFitThreshold);
    d.xi_bar_hat += fit.lambdas[i] * d.xi_hat[i];
  }
  return d;
}

std::vector<double> symmetric_eigenvalues(const Eigen::MatrixXd& input, double tol) {
  if (input.rows() != input.cols()) throw std::invalid_argument("symmetric_eigenvalues: matrix must be square");
  Eigen::MatrixXd A = 0.5 * (input + input.transpose());
  const Eigen::Index n = A.rows();
  const double scale = std::max(A.norm(), std::numeric_limits<double>::min());

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) off += A(p, q) * A(p, q);
    }
    if (std::sqrt(2.0 * off) <= tol * scale) break;

    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (A(p, q) == 0.0) continue;
        // Rotation angle that annihilates A(p,q).
        const double theta = (A(q, q) - A(p, p)) / (2.0 * A(p, q));
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = A(k, p);
          const double akq = A(k, q);
          A(k, p) = c * akp - s * akq;
          A(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = A(p, k);
          const double aqk = A(q, k);
          A(p, k) = c * apk - s * aqk;
          A(q, k) = s * apk + c * aqk;
        }
      }
    }
  }

  std::vector<double> eig(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) eig[static_cast<std::size_t>(i)] = A(i, i);
  std::sort(eig.begin(), eig.end());
  return eig;
}

EigenRange design_eigen_diagnostic(const PanelDataset& panel, const UniformDrawSequence& draws, int t) {
  if (!panel.is_pre_period(t)) throw std::invalid_argument("eigen diagnostic: t must be a pre-treatment period");
  const auto M = static_cast<Eigen::Index>(draws.values.size());
  const auto J = static_cast<Eigen::Index>(panel.num_controls());
  Eigen::MatrixXd X(M, J);
  for (Eigen::Index j = 0; j < J; ++j) {
    const auto fn = EmpiricalQuantileFn::fit(panel.cell(static_cast<std::size_t>(j + 1), t));
    const auto col = build_artificial_sample(fn, draws);
    X.col(j) = Eigen::Map<const Eigen::VectorXd>(col.data(), M);
  }
  const Eigen::MatrixXd gram = (X.transpose() * X) / static_cast<double>(M);
  const auto eig = symmetric_eigenvalues(gram);
  return {eig.front(), eig.back()};
}

ConvergenceReport evaluate_convergence(const DscFit& fit, const OracleSpec& oracle, const SolverOptions& options) {
  const auto design = stack_oracle(oracle);
  auto opt = optimal_weights(design, options);
  const double risk_fit = post_treatment_risk(fit.aggregated, design);
  return ConvergenceReport{make_ratio(risk_fit, opt.objective), weight_distance(fit.aggregated, opt.weights),
                           std::move(opt.weights), pretreatment_fit_diagnostics(fit)};
}

}  // namespace dsc
