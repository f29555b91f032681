#include "dsc/simulation.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <stdexcept>
#include <thread>

#include "dsc/errors.hpp"
#include "dsc/estimator.hpp"
#include "dsc/random.hpp"

namespace dsc {
namespace {

// Stream identifiers below a replication seed.
enum Stream : std::uint64_t { kParameters = 1, kSample = 2, kOracle = 3, kDraws = 4 };

using Cells = std::vector<std::vector<std::vector<double>>>;

Cells empty_cells(std::size_t units, int periods, std::size_t M) {
  return Cells(units, std::vector<std::vector<double>>(static_cast<std::size_t>(periods), std::vector<double>(M)));
}

std::vector<int> unit_ids(std::size_t units) {
  std::vector<int> ids(units);
  for (std::size_t u = 0; u < units; ++u) ids[u] = static_cast<int>(u + 1);
  return ids;
}

Replication gen_model_free(std::size_t J, std::size_t M, int t0, int t1, std::uint64_t seed,
                           const ReplicationOptions& options) {
  const std::size_t units = J + 1;
  const int periods = t0 + t1;

  Rng params(derive_seed(seed, {kParameters}));
  std::vector<double> mu(units, 0.0), sigma(units, 0.0);
  for (std::size_t u = 1; u < units; ++u) {
    const std::size_t j = u + 1;  // units numbered from 1, treated first
    mu[u] = params.uniform(3.0, 10.0);
    sigma[u] = (j % 2 == 1) ? 3.0 : 2.5;
  }

  Rng sample(derive_seed(seed, {kSample}));
  Cells cells = empty_cells(units, periods, M);
  for (int t = 0; t < periods; ++t) {
    for (std::size_t u = 0; u < units; ++u) {
      auto& cell = cells[u][static_cast<std::size_t>(t)];
      for (double& v : cell) v = (u == 0) ? sample.chi_square(2.0) : sample.normal(mu[u], sigma[u]);
    }
  }

  OracleSpec oracle;
  oracle.grid_points = options.grid_points;
  std::vector<QuantileFn> laws;
  laws.emplace_back(AnalyticDistribution{ChiSquare{2.0}});
  for (std::size_t u = 1; u < units; ++u) laws.emplace_back(AnalyticDistribution{Normal{mu[u], sigma[u]}});
  oracle.post_periods.assign(static_cast<std::size_t>(t1), laws);

  return Replication{PanelDataset(unit_ids(units), std::move(cells), t0), std::move(oracle)};
}

Replication gen_quantile_factor(std::size_t J, std::size_t M, int t0, int t1, std::uint64_t seed,
                                const ReplicationOptions& options) {
  const std::size_t units = J + 1;
  const int periods = t0 + t1;
  constexpr double factor_sd = 3.0;

  Rng params(derive_seed(seed, {kParameters}));
  std::vector<double> mu(units), sigma(units);
  for (std::size_t u = 0; u < units; ++u) {
    const std::size_t j = u + 1;
    mu[u] = (u == 0) ? 2.0 : params.uniform(2.0, 10.0);
    sigma[u] = (j % 2 == 1) ? 2.7 : 3.0;
  }
  std::vector<double> period_mean(static_cast<std::size_t>(periods));
  for (double& m : period_mean) m = params.normal();

  // Loadings are fixed per (unit, m); factors vary with (period, m).
  Rng sample(derive_seed(seed, {kSample}));
  std::vector<std::vector<double>> load1(units, std::vector<double>(M)), load2 = load1;
  for (std::size_t u = 0; u < units; ++u) {
    for (std::size_t m = 0; m < M; ++m) {
      load1[u][m] = sample.normal(mu[u], sigma[u]);
      load2[u][m] = sample.normal(mu[u], sigma[u]);
    }
  }
  Cells cells = empty_cells(units, periods, M);
  std::vector<double> f1(M), f2(M);
  for (int t = 0; t < periods; ++t) {
    const double mt = period_mean[static_cast<std::size_t>(t)];
    for (std::size_t m = 0; m < M; ++m) {
      f1[m] = sample.normal(mt, factor_sd);
      f2[m] = sample.normal(mt, factor_sd);
    }
    for (std::size_t u = 0; u < units; ++u) {
      auto& cell = cells[u][static_cast<std::size_t>(t)];
      for (std::size_t m = 0; m < M; ++m) cell[m] = load1[u][m] * f1[m] + load2[u][m] * f2[m];
    }
  }

  // Oracle: a large fresh sample per unit from the same parameters. One set of
  // loading and standardized factor draws per unit serves every post period.
  const std::size_t E = options.oracle_eval_size;
  if (E == 0) throw std::invalid_argument("oracle evaluation size must be positive");
  OracleSpec oracle;
  oracle.grid_points = options.grid_points;
  oracle.post_periods.resize(static_cast<std::size_t>(t1));
  std::vector<double> l1(E), l2(E), z1(E), z2(E), x(E);
  for (std::size_t u = 0; u < units; ++u) {
    Rng fresh(derive_seed(seed, {kOracle, u}));
    for (std::size_t e = 0; e < E; ++e) {
      l1[e] = fresh.normal(mu[u], sigma[u]);
      l2[e] = fresh.normal(mu[u], sigma[u]);
      z1[e] = fresh.normal();
      z2[e] = fresh.normal();
    }
    for (int k = 0; k < t1; ++k) {
      const double mt = period_mean[static_cast<std::size_t>(t0 + k)];
      for (std::size_t e = 0; e < E; ++e) {
        x[e] = l1[e] * (mt + factor_sd * z1[e]) + l2[e] * (mt + factor_sd * z2[e]);
      }
      oracle.post_periods[static_cast<std::size_t>(k)].emplace_back(EmpiricalQuantileFn::fit(x));
    }
  }

  return Replication{PanelDataset(unit_ids(units), std::move(cells), t0), std::move(oracle)};
}

struct Moments {
  double mean = 0.0;
  double se = 0.0;
};

Moments moments(std::span<const double> xs) {
  Moments out;
  const double n = static_cast<double>(xs.size());
  for (double x : xs) out.mean += x;
  out.mean /= n;
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - out.mean) * (x - out.mean);
    out.se = std::sqrt(ss / (n - 1.0) / n);
  }
  return out;
}

}  // namespace

std::string dgp_tag(const DgpSpec& dgp) {
  return std::holds_alternative<ModelFreeDgp>(dgp) ? "model-free" : "factor";
}

std::size_t dgp_controls(const DgpSpec& dgp) {
  return std::visit([](const auto& d) { return d.controls; }, dgp);
}

DgpSpec with_controls(const DgpSpec& dgp, std::size_t controls) {
  if (std::holds_alternative<ModelFreeDgp>(dgp)) return ModelFreeDgp{controls};
  return QuantileFactorDgp{controls};
}

Replication gen_replication(const DgpSpec& dgp, std::size_t M, int t0, int t1, std::uint64_t seed,
                            const ReplicationOptions& options) {
  const std::size_t J = dgp_controls(dgp);
  if (J < 2) throw std::invalid_argument("simulation needs at least two controls");
  if (M == 0 || t0 < 1 || t1 < 1) throw std::invalid_argument("simulation needs M, T0 and T1 positive");
  if (std::holds_alternative<ModelFreeDgp>(dgp)) return gen_model_free(J, M, t0, t1, seed, options);
  return gen_quantile_factor(J, M, t0, t1, seed, options);
}

ReplicationResult run_replication(const DgpSpec& dgp, std::size_t M, int t0, int t1, std::uint64_t seed,
                                  const ReplicationOptions& options) {
  const auto rep = gen_replication(dgp, M, t0, t1, seed, options);

  EstimationConfig config;
  config.draws = M;
  config.seed = derive_seed(seed, {kDraws});
  config.tol = options.solver.tol;
  config.max_iter = options.solver.max_iter;
  const auto fit = fit_dsc(rep.panel, config);
  if (!fit.converged) {
    throw NumericalError("per-period weight solve not certified (seed " + std::to_string(seed) + ")");
  }

  const auto design = stack_oracle(rep.oracle);
  const auto opt = optimal_weights(design, options.solver);
  if (!opt.converged) {
    throw NumericalError("optimal weight solve not certified (seed " + std::to_string(seed) + ")");
  }
  const double risk_fit = post_treatment_risk(fit.aggregated, design);
  if (opt.objective <= kZeroRiskThreshold) {
    throw NumericalError("optimal post-treatment risk is zero (seed " + std::to_string(seed) + ")");
  }

  ReplicationResult out;
  out.seed = seed;
  out.risk_fit = risk_fit;
  out.risk_opt = opt.objective;
  out.ratio = risk_fit / opt.objective;
  out.weight_distance = weight_distance(fit.aggregated, opt.weights);
  out.xi_bar = pretreatment_fit_diagnostics(fit).xi_bar_hat;
  return out;
}

std::uint64_t replication_seed(const SimulationGrid& grid, std::size_t controls, std::size_t draws, std::size_t rep) {
  const std::uint64_t tag = std::holds_alternative<ModelFreeDgp>(grid.dgp) ? 1 : 2;
  return derive_seed(grid.master_seed, {tag, controls, draws, rep});
}

SimulationReport run_grid(const SimulationGrid& grid) {
  if (grid.controls_list.empty() || grid.draws_list.empty() || grid.reps == 0) {
    throw std::invalid_argument("simulation grid needs J values, M values and at least one replication");
  }

  struct Task {
    std::size_t controls, draws, rep;
  };
  std::vector<Task> tasks;
  for (std::size_t J : grid.controls_list) {
    for (std::size_t M : grid.draws_list) {
      for (std::size_t r = 0; r < grid.reps; ++r) tasks.push_back({J, M, r});
    }
  }

  std::vector<ReplicationResult> results(tasks.size());
  std::vector<std::exception_ptr> failures(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      const auto& task = tasks[i];
      const auto seed = replication_seed(grid, task.controls, task.draws, task.rep);
      try {
        results[i] = run_replication(with_controls(grid.dgp, task.controls), task.draws, grid.t0, grid.t1, seed,
                                     grid.replication);
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };
  {
    const unsigned threads = std::max(1u, grid.threads);
    std::vector<std::jthread> pool;
    for (unsigned k = 1; k < threads; ++k) pool.emplace_back(worker);
    worker();
  }

  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (!failures[i]) continue;
    const auto seed = replication_seed(grid, tasks[i].controls, tasks[i].draws, tasks[i].rep);
    std::string why;
    try {
      std::rethrow_exception(failures[i]);
    } catch (const std::exception& e) {
      why = e.what();
    }
    throw NumericalError("cell J=" + std::to_string(tasks[i].controls) + ", M=" + std::to_string(tasks[i].draws) +
                         " failed at replication " + std::to_string(tasks[i].rep) + " (seed " +
                         std::to_string(seed) + "): " + why);
  }

  SimulationReport report;
  const std::string tag = dgp_tag(grid.dgp);
  std::size_t i = 0;
  for (std::size_t J : grid.controls_list) {
    for (std::size_t M : grid.draws_list) {
      std::vector<double> ratios, distances;
      for (std::size_t r = 0; r < grid.reps; ++r, ++i) {
        ratios.push_back(results[i].ratio);
        distances.push_back(results[i].weight_distance);
        report.replications.push_back({tag, J, M, r, results[i]});
      }
      const auto rm = moments(ratios);
      const auto dm = moments(distances);
      report.rows.push_back({tag, J, M, grid.reps, rm.mean, rm.se, dm.mean, dm.se});
    }
  }
  return report;
}

void write_report_csv(const SimulationReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << "dgp,J,M,reps,mean_ratio,se_ratio,mean_wdist,se_wdist\n" << std::setprecision(12);
  for (const auto& r : report.rows) {
    out << r.dgp << ',' << r.controls << ',' << r.draws << ',' << r.reps << ',' << r.mean_ratio << ','
        << r.se_ratio << ',' << r.mean_weight_distance << ',' << r.se_weight_distance << '\n';
  }
}

void write_replications_csv(const SimulationReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << "dgp,J,M,rep,seed,ratio,wdist,xi_bar\n" << std::setprecision(17);
  for (const auto& r : report.replications) {
    out << r.dgp << ',' << r.controls << ',' << r.draws << ',' << r.rep << ',' << r.result.seed << ','
        << r.result.ratio << ',' << r.result.weight_distance << ',' << r.result.xi_bar << '\n';
  }
}

}  // namespace dsc
