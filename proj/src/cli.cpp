#include "dsc/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

#include <CLI11.hpp>

#include "dsc/asymptotics.hpp"
#include "dsc/errors.hpp"
#include "dsc/estimator.hpp"
#include "dsc/panel.hpp"
#include "dsc/quantile.hpp"
#include "dsc/simulation.hpp"
#include "dsc/wasserstein.hpp"

namespace dsc::cli {
namespace {

// Thrown for bad flag values that CLI11 cannot check by itself.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string shortest(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

bool parse_double(std::string_view s, double& out) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return false;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size() && std::isfinite(out);
}

std::vector<double> parse_real_list(const std::string& text, const char* what) {
  std::vector<double> values;
  std::size_t start = 0;
  while (true) {
    const auto end = text.find(',', start);
    const auto item = text.substr(start, end == std::string::npos ? std::string::npos : end - start);
    double v = 0.0;
    if (!parse_double(item, v)) throw UsageError(std::string(what) + ": cannot parse '" + item + "'");
    values.push_back(v);
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return values;
}

DrawMode parse_draw_mode(const std::string& text) {
  if (text == "iid") return DrawMode::iid();
  if (text.rfind("ar1:", 0) == 0) {
    double rho = 0.0;
    if (!parse_double(std::string_view(text).substr(4), rho) || !(std::fabs(rho) < 1.0)) {
      throw UsageError("--draw-mode: rho must lie in (-1,1)");
    }
    return DrawMode::ar1(rho);
  }
  throw UsageError("--draw-mode: expected 'iid' or 'ar1:<rho>'");
}

/// Single-column sample file: one value per line, optional header line.
std::vector<double> load_sample(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::vector<double> values;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    double v = 0.0;
    if (!parse_double(line, v)) {
      if (lineno == 1) continue;
      throw DataError("not a finite number: '" + line + "'", lineno);
    }
    values.push_back(v);
  }
  if (values.empty()) throw DataError("'" + path + "' holds no values");
  return values;
}

struct DataFlags {
  std::string data;
  int t0 = 0;
  std::optional<std::size_t> m;
  double c = 1.0;
  std::uint64_t seed = 0;
  std::string lambda = "uniform";
  std::string draw_mode = "iid";
  double tol = 1e-10;
  int max_iter = 50000;
  std::string out = "dsc";

  void attach(CLI::App& cmd) {
    cmd.add_option("--data", data, "Long-format unit,time,value CSV")->required();
    cmd.add_option("--t0", t0, "Number of pre-treatment periods")->required();
    cmd.add_option("--m", m, "Number of uniform draws M (overrides --c)");
    cmd.add_option("--c", c, "Draw multiplier C in M = ceil(C n)")->capture_default_str();
    cmd.add_option("--seed", seed, "Seed of the uniform draws")->capture_default_str();
    cmd.add_option("--lambda", lambda, "'uniform' or comma-separated period weights")->capture_default_str();
    cmd.add_option("--draw-mode", draw_mode, "'iid' or 'ar1:<rho>'")->capture_default_str();
    cmd.add_option("--tol", tol, "Solver KKT tolerance")->capture_default_str();
    cmd.add_option("--max-iter", max_iter, "Solver iteration cap")->capture_default_str();
    cmd.add_option("--out", out, "Output path prefix")->capture_default_str();
  }

  EstimationConfig config() const {
    EstimationConfig cfg;
    if (m) {
      if (*m == 0) throw UsageError("--m must be positive");
      cfg.draws = *m;
    } else {
      if (!(c > 0.0) || !std::isfinite(c)) throw UsageError("--c must be positive");
      cfg.draw_multiplier = c;
    }
    cfg.seed = seed;
    if (lambda != "uniform") cfg.lambdas = parse_real_list(lambda, "--lambda");
    cfg.draw_mode = parse_draw_mode(draw_mode);
    if (!(tol > 0.0)) throw UsageError("--tol must be positive");
    if (max_iter <= 0) throw UsageError("--max-iter must be positive");
    cfg.tol = tol;
    cfg.max_iter = max_iter;
    return cfg;
  }
};

DscFit checked_fit(const PanelDataset& panel, const EstimationConfig& cfg) {
  DscFit fit = [&] {
    try {
      return fit_dsc(panel, cfg);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }();
  if (!fit.converged) {
    throw NumericalError("solver did not reach the KKT tolerance within " + std::to_string(cfg.max_iter) +
                         " iterations");
  }
  return fit;
}

int cmd_estimate(const DataFlags& flags, std::size_t qte_points, std::ostream& out, std::ostream& err) {
  const auto cfg = flags.config();
  err << "seed: " << cfg.seed << '\n';
  const auto panel = load_panel_csv(flags.data, flags.t0);
  const auto fit = checked_fit(panel, cfg);

  std::vector<QteCurve> curves;
  const auto grid = default_qte_grid(qte_points);
  for (int t = panel.t0() + 1; t <= panel.num_periods(); ++t) curves.push_back(qte_curve(fit, panel, t, grid));

  const auto diag = pretreatment_fit_diagnostics(fit);
  out << "M: " << fit.draws << '\n' << "weights:\n";
  for (std::size_t j = 0; j < panel.num_controls(); ++j) {
    out << "  unit " << panel.unit_ids()[j + 1] << "  " << fixed6(fit.aggregated[j]) << '\n';
  }
  out << "xi_bar: " << fixed6(diag.xi_bar_hat) << '\n';

  write_fit_json(fit, panel, flags.out + ".fit.json");
  write_qte_csv(curves, flags.out + ".qte.csv");
  out << "wrote " << flags.out << ".fit.json, " << flags.out << ".qte.csv\n";
  return kOk;
}

int cmd_diagnose(const DataFlags& flags, std::ostream& out, std::ostream& err) {
  const auto cfg = flags.config();
  err << "seed: " << cfg.seed << '\n';
  const auto panel = load_panel_csv(flags.data, flags.t0);
  const auto fit = checked_fit(panel, cfg);
  const auto diag = pretreatment_fit_diagnostics(fit);
  const auto draws = draw_uniforms(fit.draws, cfg.draw_mode, cfg.seed);

  const std::string path = flags.out + ".diag.csv";
  std::ofstream csv(path);
  if (!csv) throw DataError("cannot write '" + path + "'");
  csv << "t,xi_hat,perfect_fit,eigen_min,eigen_max\n";

  out << "M: " << fit.draws << '\n';
  for (std::size_t i = 0; i < diag.periods.size(); ++i) {
    const int t = diag.periods[i];
    const auto eig = design_eigen_diagnostic(panel, draws, t);
    out << "t=" << t << "  xi_hat=" << shortest(diag.xi_hat[i]) << "  eigen_min=" << shortest(eig.min)
        << "  eigen_max=" << shortest(eig.max) << (diag.perfect_fit[i] ? "  [perfect fit]" : "") << '\n';
    if (eig.min <= 1e-10 * std::max(eig.max, 1.0)) {
      err << "warning: period " << t << ": eigen_min ~ 0, control quantiles are collinear\n";
    }
    csv << t << ',' << shortest(diag.xi_hat[i]) << ',' << (diag.perfect_fit[i] ? 1 : 0) << ',' << shortest(eig.min)
        << ',' << shortest(eig.max) << '\n';
  }
  out << "xi_bar: " << shortest(diag.xi_bar_hat) << '\n';
  out << "wrote " << path << '\n';
  return kOk;
}

int cmd_wasserstein(const std::vector<std::string>& files, std::size_t grid, std::ostream& out, std::ostream& err) {
  err << "seed: 0 (no randomness used)\n";
  if (grid == 0) throw UsageError("--grid must be positive");
  const auto a = load_sample(files[0]);
  const auto b = load_sample(files[1]);
  double w2 = 0.0;
  if (a.size() == b.size()) {
    w2 = w2_empirical_equal_n(a, b);
  } else {
    w2 = w2_grid(EmpiricalQuantileFn::fit(a), EmpiricalQuantileFn::fit(b), grid);
  }
  out << fixed6(w2) << '\n';
  return kOk;
}

struct SimulateFlags {
  std::string dgp = "model-free";
  std::vector<std::size_t> j_list;
  std::vector<std::size_t> m_list;
  std::size_t reps = 200;
  bool full_scale = false;
  int t0 = 10;
  int t1 = 5;
  std::uint64_t seed = 0;
  std::string out;
  std::string per_rep;
  unsigned threads = 1;
  std::size_t oracle_eval = 100000;
  std::size_t grid = 10000;
};

int cmd_simulate(SimulateFlags flags, std::ostream& out, std::ostream& err) {
  err << "seed: " << flags.seed << '\n';
  SimulationGrid grid;
  if (flags.dgp == "model-free") {
    grid.dgp = ModelFreeDgp{};
    if (flags.j_list.empty()) flags.j_list = {20, 50};
    if (flags.m_list.empty()) flags.m_list = {50, 100, 200, 400};
  } else if (flags.dgp == "factor") {
    grid.dgp = QuantileFactorDgp{};
    if (flags.j_list.empty()) flags.j_list = {10, 20};
    if (flags.m_list.empty()) flags.m_list = {100, 200, 300, 400};
  } else {
    throw UsageError("--dgp must be 'model-free' or 'factor'");
  }
  const auto positive = [](const std::vector<std::size_t>& v) {
    return std::all_of(v.begin(), v.end(), [](std::size_t x) { return x > 0; });
  };
  if (!positive(flags.j_list)) throw UsageError("--j entries must be positive");
  if (!positive(flags.m_list)) throw UsageError("--m entries must be positive");
  if (flags.full_scale) flags.reps = 1000;
  if (flags.reps == 0) throw UsageError("--reps must be positive");
  if (flags.t0 < 1 || flags.t1 < 1) throw UsageError("--t0 and --t1 must be positive");
  if (flags.threads == 0) throw UsageError("--threads must be positive");
  if (flags.oracle_eval == 0 || flags.grid == 0) throw UsageError("--oracle-eval and --grid must be positive");

  grid.controls_list = flags.j_list;
  grid.draws_list = flags.m_list;
  grid.reps = flags.reps;
  grid.t0 = flags.t0;
  grid.t1 = flags.t1;
  grid.master_seed = flags.seed;
  grid.replication.oracle_eval_size = flags.oracle_eval;
  grid.replication.grid_points = flags.grid;
  grid.threads = flags.threads;

  const auto report = run_grid(grid);
  write_report_csv(report, flags.out);
  if (!flags.per_rep.empty()) write_replications_csv(report, flags.per_rep);

  out << "dgp,J,M,reps,mean_ratio,se_ratio,mean_wdist,se_wdist\n";
  for (const auto& row : report.rows) {
    out << row.dgp << ',' << row.controls << ',' << row.draws << ',' << row.reps << ',' << fixed6(row.mean_ratio)
        << ',' << fixed6(row.se_ratio) << ',' << fixed6(row.mean_weight_distance) << ','
        << fixed6(row.se_weight_distance) << '\n';
  }
  out << "wrote " << flags.out << (flags.per_rep.empty() ? "" : ", " + flags.per_rep) << '\n';
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Distributional synthetic control estimator and Monte Carlo lab", "dsc"};
  app.require_subcommand(1);

  DataFlags est_flags;
  std::size_t qte_points = 99;
  auto* estimate = app.add_subcommand("estimate", "Fit DSC weights and write the fit and QTE curves");
  est_flags.attach(*estimate);
  estimate->add_option("--qte-grid", qte_points, "Number of QTE levels i/(n+1)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);

  DataFlags diag_flags;
  auto* diagnose = app.add_subcommand("diagnose", "Pre-treatment fit and design eigenvalue diagnostics");
  diag_flags.attach(*diagnose);

  std::vector<std::string> files;
  std::size_t w2_grid_points = 10000;
  auto* wasserstein = app.add_subcommand("wasserstein", "2-Wasserstein distance between two sample files");
  wasserstein->add_option("files", files, "Two single-column sample files")->required()->expected(2);
  wasserstein->add_option("--grid", w2_grid_points, "Midpoint grid size when lengths differ")->capture_default_str();

  SimulateFlags sim;
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo grid over (J, M)");
  simulate->add_option("--dgp", sim.dgp, "model-free | factor")->capture_default_str();
  simulate->add_option("--j", sim.j_list, "Comma-separated donor pool sizes")->delimiter(',');
  simulate->add_option("--m", sim.m_list, "Comma-separated draw counts")->delimiter(',');
  auto* reps_opt = simulate->add_option("--reps", sim.reps, "Replications per cell")->capture_default_str();
  simulate->add_flag("--full-scale", sim.full_scale, "Use 1000 replications per cell")->excludes(reps_opt);
  simulate->add_option("--t0", sim.t0, "Pre-treatment periods")->capture_default_str();
  simulate->add_option("--t1", sim.t1, "Post-treatment periods")->capture_default_str();
  simulate->add_option("--seed", sim.seed, "Master seed")->capture_default_str();
  simulate->add_option("--out", sim.out, "Report CSV")->required();
  simulate->add_option("--per-rep", sim.per_rep, "Optional per-replication CSV");
  simulate->add_option("--threads", sim.threads, "Worker threads (results do not depend on it)")
      ->envname("DSC_THREADS")
      ->capture_default_str();
  simulate->add_option("--oracle-eval", sim.oracle_eval, "Oracle evaluation sample size (factor DGP)")
      ->capture_default_str();
  simulate->add_option("--grid", sim.grid, "Risk integration grid size")->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    const auto subs = app.get_subcommands();
    out << (subs.empty() ? app.help() : subs.front()->help());
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return kUsage;
  }

  try {
    if (estimate->parsed()) return cmd_estimate(est_flags, qte_points, out, err);
    if (diagnose->parsed()) return cmd_diagnose(diag_flags, out, err);
    if (wasserstein->parsed()) return cmd_wasserstein(files, w2_grid_points, out, err);
    return cmd_simulate(sim, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kData;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::domain_error& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
}

}  // namespace dsc::cli
