// Writes the example panel shipped under data/. Five normal controls; the
// treated unit draws from the quantile mixture 0.5 Q2 + 0.3 Q3 + 0.2 Q4 plus
// N(0, 0.25^2) noise, and is shifted by +1 after period 8 of 10.
#include <cstdio>
#include <exception>
#include <vector>

#include "dsc/distributions.hpp"
#include "dsc/panel.hpp"
#include "dsc/random.hpp"

int main(int argc, char** argv) {
  if (argc != 2) {
    std::fprintf(stderr, "usage: make_example_panel <out.csv>\n");
    return 1;
  }
  try {
    constexpr int t0 = 8;
    constexpr int periods = 10;
    constexpr std::size_t n = 200;
    const std::vector<dsc::Normal> controls{{1.0, 1.0}, {4.0, 2.0}, {6.0, 0.5}, {3.0, 3.0}, {8.0, 1.5}};
    const std::vector<double> mix{0.5, 0.3, 0.2, 0.0, 0.0};

    dsc::Rng rng(2024);
    std::vector<std::vector<std::vector<double>>> cells(controls.size() + 1);
    for (int t = 1; t <= periods; ++t) {
      std::vector<double> treated(n);
      for (double& v : treated) {
        const double u = rng.uniform();
        v = 0.25 * rng.normal() + (t > t0 ? 1.0 : 0.0);
        for (std::size_t j = 0; j < controls.size(); ++j) v += mix[j] * dsc::analytic_quantile(controls[j], u);
      }
      cells[0].push_back(std::move(treated));
      for (std::size_t j = 0; j < controls.size(); ++j) {
        std::vector<double> cell(n);
        for (double& v : cell) v = rng.normal(controls[j].mu, controls[j].sigma);
        cells[j + 1].push_back(std::move(cell));
      }
    }
    dsc::write_panel_csv(dsc::PanelDataset({1, 2, 3, 4, 5, 6}, std::move(cells), t0), argv[1]);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 1;
  }
  return 0;
}
