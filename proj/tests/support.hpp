#pragma once

// Shared generators and independent oracles for the test suites.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include <Eigen/Dense>

#include "dsc/panel.hpp"

namespace testing {

inline std::filesystem::path scratch_dir() {
  static std::atomic<int> counter{0};
  auto dir = std::filesystem::temp_directory_path() /
             ("dsc_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  std::filesystem::create_directories(dir);
  return dir;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

// Standard normal CDF from the C library, independent of the code under test.
inline double oracle_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

template <class Cdf>
double bisect_quantile(Cdf cdf, double q, double lo, double hi) {
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (cdf(mid) < q) lo = mid; else hi = mid;
  }
  return 0.5 * (lo + hi);
}

inline double oracle_normal_quantile(double q) { return bisect_quantile(oracle_normal_cdf, q, -40.0, 40.0); }

// Chi-square CDF for even df in closed form (Poisson tail sum) and df = 1 via erf.
inline double oracle_chi_square_cdf(double x, int df) {
  if (x <= 0.0) return 0.0;
  if (df == 1) return std::erf(std::sqrt(x / 2.0));
  double term = 1.0, sum = 1.0;
  for (int k = 1; k < df / 2; ++k) {
    term *= (x / 2.0) / k;
    sum += term;
  }
  return 1.0 - std::exp(-x / 2.0) * sum;
}

// Random point of the simplex (normalized exponentials).
inline std::vector<double> random_simplex(std::mt19937_64& gen, std::size_t J) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> w(J);
  double s = 0.0;
  for (double& v : w) s += (v = e(gen));
  for (double& v : w) v /= s;
  double total = 0.0;
  for (std::size_t j = 0; j + 1 < J; ++j) total += w[j];
  w[J - 1] = std::max(0.0, 1.0 - total);
  return w;
}

// Objective (1/M)||Xw - y||^2 computed directly, row by row.
inline double direct_objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const std::vector<double>& w) {
  double sum = 0.0;
  for (Eigen::Index m = 0; m < X.rows(); ++m) {
    double r = -y(m);
    for (Eigen::Index j = 0; j < X.cols(); ++j) r += X(m, j) * w[static_cast<std::size_t>(j)];
    sum += r * r;
  }
  return sum / static_cast<double>(X.rows());
}

// Best objective over the grid {w : w_j = k_j * step, sum = 1}, J in {2,3}.
struct GridOptimum {
  double objective;
  std::vector<double> weights;
};

inline GridOptimum grid_search(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double step) {
  const auto M = static_cast<double>(X.rows());
  const Eigen::MatrixXd A = X.transpose() * X / M;
  const Eigen::VectorXd b = X.transpose() * y / M;
  const double c = y.squaredNorm() / M;
  const auto J = X.cols();
  const int K = static_cast<int>(std::lround(1.0 / step));
  GridOptimum best{INFINITY, {}};
  auto consider = [&](const Eigen::VectorXd& w) {
    const double f = w.dot(A * w) - 2.0 * b.dot(w) + c;
    if (f < best.objective) best = {f, std::vector<double>(w.data(), w.data() + w.size())};
  };
  Eigen::VectorXd w(J);
  if (J == 2) {
    for (int i = 0; i <= K; ++i) {
      w << i * step, (K - i) * step;
      consider(w);
    }
  } else {
    for (int i = 0; i <= K; ++i) {
      for (int k = 0; k <= K - i; ++k) {
        w << i * step, k * step, (K - i - k) * step;
        consider(w);
      }
    }
  }
  // The Gram form loses a little accuracy; report the direct objective.
  best.objective = direct_objective(X, y, best.weights);
  return best;
}

// Random panel: unit u in period t ~ N(mu_u + t * drift_u, sd_u^2), n per cell.
inline dsc::PanelDataset random_panel(std::mt19937_64& gen, std::size_t controls, int periods, int t0,
                                      std::size_t n) {
  std::uniform_real_distribution<double> loc(-2.0, 2.0), scale(0.5, 2.5);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<int> ids;
  std::vector<std::vector<std::vector<double>>> cells;
  for (std::size_t u = 0; u <= controls; ++u) {
    ids.push_back(static_cast<int>(u + 1));
    const double mu = loc(gen), sd = scale(gen), drift = 0.1 * loc(gen);
    std::vector<std::vector<double>> row;
    for (int t = 1; t <= periods; ++t) {
      std::vector<double> cell(n);
      for (double& v : cell) v = mu + drift * t + sd * z(gen);
      row.push_back(std::move(cell));
    }
    cells.push_back(std::move(row));
  }
  return dsc::PanelDataset(std::move(ids), std::move(cells), t0);
}

// Panel whose cells are given per unit and repeated across all periods.
inline dsc::PanelDataset constant_panel(const std::vector<std::vector<double>>& per_unit, int periods, int t0) {
  std::vector<int> ids;
  std::vector<std::vector<std::vector<double>>> cells;
  for (std::size_t u = 0; u < per_unit.size(); ++u) {
    ids.push_back(static_cast<int>(u + 1));
    cells.emplace_back(static_cast<std::size_t>(periods), per_unit[u]);
  }
  return dsc::PanelDataset(std::move(ids), std::move(cells), t0);
}

}  // namespace testing
