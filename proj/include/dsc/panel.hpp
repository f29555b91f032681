#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "dsc/random.hpp"

namespace dsc {

/// Micro-level panel: for every unit and period, a sample of outcomes.
///
/// Unit 1 is the treated unit and sits at index 0; the remaining units are
/// the controls in ascending id order. Periods are 1..T, and periods 1..t0
/// are pre-treatment. Each unit keeps one sample size across all periods.
class PanelDataset {
 public:
  /// cells[u][p] holds the observations of unit_ids[u] in period p + 1.
  /// Throws DataError when any invariant is violated.
  PanelDataset(std::vector<int> unit_ids, std::vector<std::vector<std::vector<double>>> cells, int t0);

  std::size_t num_units() const { return unit_ids_.size(); }
  /// J, the size of the donor pool.
  std::size_t num_controls() const { return unit_ids_.size() - 1; }
  int num_periods() const { return static_cast<int>(cells_.front().size()); }
  int t0() const { return t0_; }
  int t1() const { return num_periods() - t0_; }

  bool is_pre_period(int t) const { return t >= 1 && t <= t0_; }
  bool is_post_period(int t) const { return t > t0_ && t <= num_periods(); }

  const std::vector<int>& unit_ids() const { return unit_ids_; }

  /// Observations of unit index u (0 = treated) in period t (1-based).
  std::span<const double> cell(std::size_t u, int t) const;

  /// n_j of unit index u.
  std::size_t group_size(std::size_t u) const { return cells_[u].front().size(); }

  friend bool operator==(const PanelDataset&, const PanelDataset&) = default;

 private:
  std::vector<int> unit_ids_;
  std::vector<std::vector<std::vector<double>>> cells_;
  int t0_;
};

/// Reads a long-format `unit,time,value` file. Unit 1 must be present and is
/// the treated unit; periods must cover 1..T without gaps.
PanelDataset load_panel_csv(const std::filesystem::path& path, int t0);

/// Writes the long format back out with round-trip precision.
void write_panel_csv(const PanelDataset& panel, const std::filesystem::path& path);

/// n = min_j n_j.
std::size_t min_group_size(const PanelDataset& panel);

struct EstimationConfig {
  std::optional<std::size_t> draws;        ///< M; wins over draw_multiplier when set.
  std::optional<double> draw_multiplier;   ///< C in M = C * n.
  std::uint64_t seed = 0;
  std::optional<std::vector<double>> lambdas;  ///< Empty means uniform over pre-periods.
  DrawMode draw_mode;
  double tol = 1e-10;
  int max_iter = 50000;
};

/// Explicit M if given, otherwise ceil(C * n). Throws std::invalid_argument
/// when neither is set or the chosen value is not positive.
std::size_t resolve_M(const EstimationConfig& config, std::size_t n);

/// Throws std::invalid_argument unless lambdas are nonnegative and sum to 1 (1e-12).
void validate_lambdas(std::span<const double> lambdas);

}  // namespace dsc
