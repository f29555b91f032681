#include "dsc/panel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>

#include "dsc/errors.hpp"

namespace dsc {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
bool parse_field(std::string_view text, T& out) {
  text = trim(text);
  if (text.empty()) return false;
  if constexpr (std::is_floating_point_v<T>) {
    if (text.front() == '+') text.remove_prefix(1);
  }
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc{} && ptr == end;
}

}  // namespace

PanelDataset::PanelDataset(std::vector<int> unit_ids, std::vector<std::vector<std::vector<double>>> cells,
                           int t0)
    : unit_ids_(std::move(unit_ids)), cells_(std::move(cells)), t0_(t0) {
  if (unit_ids_.size() < 2) throw DataError("panel needs the treated unit and at least one control");
  if (cells_.size() != unit_ids_.size()) throw DataError("panel: one cell row per unit required");
  if (unit_ids_.front() != 1) throw DataError("panel: unit 1 (treated) must come first");
  if (!std::is_sorted(unit_ids_.begin(), unit_ids_.end()) ||
      std::adjacent_find(unit_ids_.begin(), unit_ids_.end()) != unit_ids_.end()) {
    throw DataError("panel: unit ids must be strictly increasing");
  }

  const std::size_t periods = cells_.front().size();
  if (periods < 2) throw DataError("panel needs at least two periods");
  if (t0_ < 1 || static_cast<std::size_t>(t0_) >= periods) {
    throw DataError("panel: t0 must satisfy 1 <= t0 < T (T = " + std::to_string(periods) + ")");
  }

  for (std::size_t u = 0; u < cells_.size(); ++u) {
    const auto& row = cells_[u];
    if (row.size() != periods) throw DataError("panel: unit " + std::to_string(unit_ids_[u]) + " misses periods");
    for (std::size_t p = 0; p < periods; ++p) {
      if (row[p].empty()) {
        throw DataError("panel: empty cell for unit " + std::to_string(unit_ids_[u]) + ", period " +
                        std::to_string(p + 1));
      }
      if (row[p].size() != row.front().size()) {
        throw DataError("panel: unit " + std::to_string(unit_ids_[u]) + " has sample size " +
                        std::to_string(row[p].size()) + " in period " + std::to_string(p + 1) +
                        " but " + std::to_string(row.front().size()) + " in period 1");
      }
      for (double v : row[p]) {
        if (!std::isfinite(v)) throw DataError("panel: non-finite observation");
      }
    }
  }
}

std::span<const double> PanelDataset::cell(std::size_t u, int t) const {
  if (u >= cells_.size() || t < 1 || t > num_periods()) {
    throw std::out_of_range("PanelDataset::cell: unit index or period out of range");
  }
  return cells_[u][static_cast<std::size_t>(t - 1)];
}

PanelDataset load_panel_csv(const std::filesystem::path& path, int t0) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open panel file '" + path.string() + "'");

  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw DataError("panel file '" + path.string() + "' is empty");
  ++line_no;
  std::string_view header = trim(line);
  if (header.size() >= 3 && static_cast<unsigned char>(header[0]) == 0xEF) header.remove_prefix(3);  // BOM
  if (header != "unit,time,value") throw DataError("expected header 'unit,time,value'", line_no);

  std::map<int, std::map<int, std::vector<double>>> rows;
  int max_time = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view text = trim(line);
    if (text.empty()) continue;

    const auto c1 = text.find(',');
    const auto c2 = c1 == std::string_view::npos ? c1 : text.find(',', c1 + 1);
    if (c2 == std::string_view::npos || text.find(',', c2 + 1) != std::string_view::npos) {
      throw DataError("expected three comma-separated fields", line_no);
    }
    int unit = 0, time = 0;
    double value = 0.0;
    if (!parse_field(text.substr(0, c1), unit) || unit < 1) {
      throw DataError("unit must be an integer >= 1", line_no);
    }
    if (!parse_field(text.substr(c1 + 1, c2 - c1 - 1), time) || time < 1) {
      throw DataError("time must be an integer >= 1", line_no);
    }
    if (!parse_field(text.substr(c2 + 1), value) || !std::isfinite(value)) {
      throw DataError("value must be a finite real number", line_no);
    }
    rows[unit][time].push_back(value);
    max_time = std::max(max_time, time);
  }
  if (rows.empty()) throw DataError("panel file '" + path.string() + "' has no observations");
  if (!rows.contains(1)) throw DataError("panel has no treated unit (unit 1)");

  std::vector<int> ids;
  std::vector<std::vector<std::vector<double>>> cells;
  for (auto& [unit, by_time] : rows) {
    ids.push_back(unit);
    auto& row = cells.emplace_back(static_cast<std::size_t>(max_time));
    for (int t = 1; t <= max_time; ++t) {
      auto it = by_time.find(t);
      if (it == by_time.end()) {
        throw DataError("empty cell for unit " + std::to_string(unit) + ", period " + std::to_string(t));
      }
      row[static_cast<std::size_t>(t - 1)] = std::move(it->second);
    }
  }
  return PanelDataset(std::move(ids), std::move(cells), t0);
}

void write_panel_csv(const PanelDataset& panel, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write panel file '" + path.string() + "'");
  out << "unit,time,value\n";
  char buf[64];
  for (std::size_t u = 0; u < panel.num_units(); ++u) {
    for (int t = 1; t <= panel.num_periods(); ++t) {
      for (double v : panel.cell(u, t)) {
        // Shortest representation that parses back to the same double.
        auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
        out << panel.unit_ids()[u] << ',' << t << ',' << std::string_view(buf, ptr) << '\n';
      }
    }
  }
  if (!out) throw DataError("failed writing panel file '" + path.string() + "'");
}

std::size_t min_group_size(const PanelDataset& panel) {
  std::size_t n = panel.group_size(0);
  for (std::size_t u = 1; u < panel.num_units(); ++u) n = std::min(n, panel.group_size(u));
  return n;
}

std::size_t resolve_M(const EstimationConfig& config, std::size_t n) {
  if (config.draws) {
    if (*config.draws == 0) throw std::invalid_argument("M must be at least 1");
    return *config.draws;
  }
  if (!config.draw_multiplier) throw std::invalid_argument("either M or C must be given");
  const double c = *config.draw_multiplier;
  if (!(c > 0.0) || !std::isfinite(c)) throw std::invalid_argument("C must be a positive real");
  double m = c * static_cast<double>(n);
  // 1.1 * 10 evaluates to 11.000000000000002; snap products that are integers up to rounding.
  if (const double r = std::nearbyint(m); std::fabs(m - r) <= 1e-12 * std::max(1.0, m)) m = r;
  m = std::ceil(m);
  return std::max<std::size_t>(1, static_cast<std::size_t>(m));
}

void validate_lambdas(std::span<const double> lambdas) {
  double total = 0.0;
  for (double l : lambdas) {
    if (!(l >= 0.0) || !std::isfinite(l)) throw std::invalid_argument("lambda weights must be nonnegative");
    total += l;
  }
  if (lambdas.empty() || std::fabs(total - 1.0) > 1e-12) {
    throw std::invalid_argument("lambda weights must sum to 1");
  }
}

}  // namespace dsc
