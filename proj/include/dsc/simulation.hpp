#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "dsc/asymptotics.hpp"
#include "dsc/panel.hpp"
#include "dsc/simplex_qp.hpp"

namespace dsc {

/// Treated ~ chi2(2); control j ~ N(mu_j, sigma_j^2) with mu_j ~ U(3,10) and
/// sigma_j = 3 for odd j, 2.5 for even j (units numbered 1..J+1).
struct ModelFreeDgp {
  std::size_t controls = 20;
};

/// Y_itm = l1_im f1_tm + l2_im f2_tm with f_s,t,m ~ N(mu_t, 9), mu_t ~ N(0,1),
/// loadings ~ N(mu_i, sigma_i^2), mu_1 = 2, mu_j ~ U(2,10) for controls and
/// sigma_i = 2.7 for odd i, 3 for even i.
struct QuantileFactorDgp {
  std::size_t controls = 10;
};

using DgpSpec = std::variant<ModelFreeDgp, QuantileFactorDgp>;

/// "model-free" or "factor".
std::string dgp_tag(const DgpSpec& dgp);
std::size_t dgp_controls(const DgpSpec& dgp);
DgpSpec with_controls(const DgpSpec& dgp, std::size_t controls);

struct ReplicationOptions {
  std::size_t oracle_eval_size = 100000;  ///< factor DGP only
  std::size_t grid_points = 10000;        ///< risk integration grid
  SolverOptions solver;
};

struct Replication {
  PanelDataset panel;  ///< units 1..J+1, periods 1..T0+T1, M draws per cell
  OracleSpec oracle;
};

/// One draw of the design. All randomness derives from `seed`.
Replication gen_replication(const DgpSpec& dgp, std::size_t M, int t0, int t1, std::uint64_t seed,
                            const ReplicationOptions& options = {});

struct ReplicationResult {
  std::uint64_t seed = 0;
  double ratio = 0.0;
  double weight_distance = 0.0;
  double xi_bar = 0.0;
  double risk_fit = 0.0;
  double risk_opt = 0.0;
};

/// Generates, fits with uniform lambdas and M draws, and scores against the
/// oracle. Throws NumericalError when a solve is not certified or the optimal
/// risk is zero.
ReplicationResult run_replication(const DgpSpec& dgp, std::size_t M, int t0, int t1, std::uint64_t seed,
                                  const ReplicationOptions& options = {});

struct SimulationGrid {
  DgpSpec dgp;  ///< J is taken from controls_list
  std::vector<std::size_t> controls_list;
  std::vector<std::size_t> draws_list;
  std::size_t reps = 200;
  int t0 = 10;
  int t1 = 5;
  std::uint64_t master_seed = 0;
  ReplicationOptions replication;
  unsigned threads = 1;  ///< does not affect results
};

struct SimulationRow {
  std::string dgp;
  std::size_t controls = 0;
  std::size_t draws = 0;
  std::size_t reps = 0;
  double mean_ratio = 0.0;
  double se_ratio = 0.0;
  double mean_weight_distance = 0.0;
  double se_weight_distance = 0.0;
};

struct ReplicationRow {
  std::string dgp;
  std::size_t controls = 0;
  std::size_t draws = 0;
  std::size_t rep = 0;
  ReplicationResult result;
};

struct SimulationReport {
  std::vector<SimulationRow> rows;              ///< one per (J, M), J-major
  std::vector<ReplicationRow> replications;     ///< in (J, M, rep) order
};

/// Seed of replication `rep` in cell (J, M); a pure function of its arguments.
std::uint64_t replication_seed(const SimulationGrid& grid, std::size_t controls, std::size_t draws, std::size_t rep);

/// Runs every cell. Throws NumericalError naming the seed of the first failed
/// replication in a cell.
SimulationReport run_grid(const SimulationGrid& grid);

/// `dgp,J,M,reps,mean_ratio,se_ratio,mean_wdist,se_wdist`
void write_report_csv(const SimulationReport& report, const std::filesystem::path& path);
/// `dgp,J,M,rep,seed,ratio,wdist,xi_bar`
void write_replications_csv(const SimulationReport& report, const std::filesystem::path& path);

}  // namespace dsc
