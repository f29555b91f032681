#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "dsc/asymptotics.hpp"
#include "dsc/estimator.hpp"
#include "dsc/quantile.hpp"
#include "support.hpp"

using namespace dsc;

namespace {

// Artificial-sample loss rebuilt from scratch: order statistic by counting.
double oracle_loss(const PanelDataset& panel, int t, const std::vector<double>& draws, const std::vector<double>& w) {
  auto sorted = [&](std::size_t u) {
    const auto c = panel.cell(u, t);
    std::vector<double> s(c.begin(), c.end());
    std::sort(s.begin(), s.end());
    return s;
  };
  auto at = [](const std::vector<double>& s, double v) {
    std::size_t k = 1;
    while (static_cast<double>(k) < v * static_cast<double>(s.size())) ++k;
    return s[k - 1];
  };
  const auto treated = sorted(0);
  std::vector<std::vector<double>> controls;
  for (std::size_t j = 1; j < panel.num_units(); ++j) controls.push_back(sorted(j));
  double sum = 0.0;
  for (double v : draws) {
    double r = -at(treated, v);
    for (std::size_t j = 0; j < controls.size(); ++j) r += w[j] * at(controls[j], v);
    sum += r * r;
  }
  return sum / static_cast<double>(draws.size());
}

EstimationConfig config_with(std::size_t M, std::uint64_t seed = 0) {
  EstimationConfig cfg;
  cfg.draws = M;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_SUITE("estimator") {

TEST_CASE("control equal to the treated unit is recovered") {
  std::mt19937_64 gen(1);
  std::normal_distribution<double> z;
  std::vector<double> treated(50), other(50), third(50);
  for (std::size_t i = 0; i < 50; ++i) treated[i] = z(gen), other[i] = 3 + z(gen), third[i] = -2 + 2 * z(gen);
  const auto panel = testing::constant_panel({treated, other, treated, third}, 3, 2);
  const auto draws = draw_uniforms(200, DrawMode::iid(), 4);
  const auto period = fit_period_weights(panel, 1, draws);
  CHECK(period.weights == SimplexWeights::vertex(3, 1));
  CHECK(period.loss == 0.0);

  const auto fit = fit_dsc(panel, config_with(200));
  CHECK(fit.converged);
  CHECK(fit.aggregated[1] == doctest::Approx(1.0).epsilon(1e-10));
  for (double l : fit.per_period_loss) CHECK(l <= 1e-20);
}

TEST_CASE("two constant controls") {
  const auto panel = testing::constant_panel({{0.3, 0.3}, {0.0, 0.0}, {1.0, 1.0}}, 2, 1);
  const auto period = fit_period_weights(panel, 1, draw_uniforms(10, DrawMode::iid(), 1));
  CHECK(period.weights[0] == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(period.weights[1] == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(period.loss <= 1e-24);
}

TEST_CASE("period fit beats random simplex points") {
  std::mt19937_64 gen(2);
  const auto panel = testing::random_panel(gen, 3, 3, 2, 200);
  const auto draws = draw_uniforms(400, DrawMode::iid(), 9);
  for (int t = 1; t <= 2; ++t) {
    const auto period = fit_period_weights(panel, t, draws);
    CHECK(period.report.converged);
    CHECK(period.loss == doctest::Approx(oracle_loss(panel, t, draws.values, period.weights.values())).epsilon(1e-12));
    for (int k = 0; k < 200; ++k) {
      const auto w = testing::random_simplex(gen, 3);
      CHECK(period.loss <= oracle_loss(panel, t, draws.values, w) + 1e-12);
    }
  }

  // 1e4-point random search on period 1 with precomputed artificial samples.
  const auto period = fit_period_weights(panel, 1, draws);
  std::vector<std::vector<double>> cols;
  for (std::size_t u = 0; u < 4; ++u) {
    cols.push_back(build_artificial_sample(EmpiricalQuantileFn::fit(panel.cell(u, 1)), draws));
  }
  for (int k = 0; k < 10000; ++k) {
    const auto w = testing::random_simplex(gen, 3);
    double sum = 0.0;
    for (std::size_t m = 0; m < 400; ++m) {
      const double r = w[0] * cols[1][m] + w[1] * cols[2][m] + w[2] * cols[3][m] - cols[0][m];
      sum += r * r;
    }
    CHECK(period.loss <= sum / 400.0 + 1e-12);
  }
}

TEST_CASE("period fit rejects post periods") {
  std::mt19937_64 gen(3);
  const auto panel = testing::random_panel(gen, 2, 3, 2, 10);
  CHECK_THROWS_AS(fit_period_weights(panel, 3, draw_uniforms(5, DrawMode::iid(), 1)), std::invalid_argument);
  CHECK_THROWS_AS(fit_period_weights(panel, 0, draw_uniforms(5, DrawMode::iid(), 1)), std::invalid_argument);
}

TEST_CASE("aggregation") {
  const std::vector<SimplexWeights> same{SimplexWeights({0.2, 0.8}), SimplexWeights({0.2, 0.8})};
  CHECK(aggregate_weights(same, std::vector<double>{0.5, 0.5}).values() == std::vector<double>{0.2, 0.8});

  const std::vector<SimplexWeights> three{SimplexWeights({0.2, 0.8}), SimplexWeights({1, 0}), SimplexWeights({0, 1})};
  CHECK(aggregate_weights(three, std::vector<double>{1, 0, 0}) == three[0]);

  const std::vector<SimplexWeights> corners{SimplexWeights({1, 0}), SimplexWeights({0, 1})};
  CHECK(aggregate_weights(corners, std::vector<double>{0.5, 0.5}).values() == std::vector<double>{0.5, 0.5});

  CHECK_THROWS_AS(aggregate_weights(corners, std::vector<double>{1.0}), std::invalid_argument);
  CHECK_THROWS_AS(aggregate_weights(corners, std::vector<double>{0.7, 0.7}), std::invalid_argument);
}

TEST_CASE("fit_dsc") {
  std::mt19937_64 gen(4);
  SUBCASE("single pre period") {
    const auto panel = testing::random_panel(gen, 4, 2, 1, 60);
    const auto fit = fit_dsc(panel, config_with(120, 3));
    const auto draws = draw_uniforms(120, DrawMode::iid(), 3);
    CHECK(fit.aggregated == fit_period_weights(panel, 1, draws).weights);
    CHECK(fit.draws == 120);
  }
  SUBCASE("deterministic") {
    const auto panel = testing::random_panel(gen, 5, 6, 4, 80);
    const auto a = fit_dsc(panel, config_with(160, 11));
    const auto b = fit_dsc(panel, config_with(160, 11));
    CHECK(a == b);
    CHECK(fit_dsc(panel, config_with(160, 12)) != a);
  }
  SUBCASE("M defaults to C n") {
    const auto panel = testing::random_panel(gen, 2, 3, 2, 33);
    EstimationConfig cfg;
    cfg.draw_multiplier = 1.5;
    CHECK(fit_dsc(panel, cfg).draws == 50);
  }
  SUBCASE("custom lambdas") {
    const auto panel = testing::random_panel(gen, 3, 4, 3, 40);
    auto cfg = config_with(40);
    cfg.lambdas = std::vector<double>{0.0, 1.0, 0.0};
    const auto fit = fit_dsc(panel, cfg);
    CHECK(fit.aggregated == fit.per_period_weights[1]);
    cfg.lambdas = std::vector<double>{0.5, 0.5};
    CHECK_THROWS_WITH_AS(fit_dsc(panel, cfg), doctest::Contains("expected 3 lambda"), std::invalid_argument);
  }
}

TEST_CASE("fit invariants on random panels") {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 15; ++trial) {
    const auto panel = testing::random_panel(gen, 2 + trial % 5, 5, 3, 30 + 10 * trial);
    auto cfg = config_with(100, static_cast<std::uint64_t>(trial));
    if (trial % 2 == 1) cfg.lambdas = std::vector<double>{0.2, 0.3, 0.5};
    const auto fit = fit_dsc(panel, cfg);
    CHECK(fit.converged);

    // Aggregation identity.
    for (std::size_t j = 0; j < fit.aggregated.size(); ++j) {
      double expected = 0.0;
      for (std::size_t t = 0; t < fit.per_period_weights.size(); ++t) {
        expected += fit.lambdas[t] * fit.per_period_weights[t][j];
      }
      CHECK(fit.aggregated[j] == doctest::Approx(expected).epsilon(1e-15));
    }

    // Loss ordering against uniform weights.
    const auto draws = draw_uniforms(100, cfg.draw_mode, cfg.seed);
    const auto uniform = SimplexWeights::uniform(panel.num_controls()).values();
    for (int t = 1; t <= panel.t0(); ++t) {
      CHECK(fit.per_period_loss[static_cast<std::size_t>(t - 1)] <= oracle_loss(panel, t, draws.values, uniform) + 1e-12);
    }
  }
}

TEST_CASE("location shift of a pre period leaves its weights unchanged") {
  std::mt19937_64 gen(6);
  for (int trial = 0; trial < 10; ++trial) {
    const auto panel = testing::random_panel(gen, 4, 3, 2, 50);
    std::vector<int> ids = panel.unit_ids();
    std::vector<std::vector<std::vector<double>>> cells(panel.num_units());
    for (std::size_t u = 0; u < panel.num_units(); ++u) {
      for (int t = 1; t <= 3; ++t) {
        const auto c = panel.cell(u, t);
        std::vector<double> v(c.begin(), c.end());
        if (t == 1) for (double& x : v) x += 7.25;
        cells[u].push_back(std::move(v));
      }
    }
    const PanelDataset shifted(ids, cells, 2);
    const auto draws = draw_uniforms(100, DrawMode::iid(), 2);
    const auto a = fit_period_weights(panel, 1, draws);
    const auto b = fit_period_weights(shifted, 1, draws);
    for (std::size_t j = 0; j < 4; ++j) CHECK(std::fabs(a.weights[j] - b.weights[j]) < 1e-8);
    CHECK(b.loss == doctest::Approx(a.loss).epsilon(1e-9));
  }
}

TEST_CASE("counterfactual quantile") {
  std::mt19937_64 gen(7);
  SUBCASE("vertex weights reproduce the control") {
    const auto panel = testing::random_panel(gen, 3, 3, 2, 40);
    auto fit = fit_dsc(panel, config_with(40));
    fit.aggregated = SimplexWeights::vertex(3, 1);
    const auto control = EmpiricalQuantileFn::fit(panel.cell(2, 3));
    for (double q : {0.01, 0.3, 0.5, 0.77, 0.99}) CHECK(counterfactual_quantile(fit, panel, 3, q) == control(q));
  }
  SUBCASE("constants") {
    const auto panel = testing::constant_panel({{5.0}, {0.0}, {10.0}}, 2, 1);
    auto fit = fit_dsc(panel, config_with(4));
    fit.aggregated = SimplexWeights({0.3, 0.7});
    for (double q : {0.1, 0.5, 0.9}) CHECK(counterfactual_quantile(fit, panel, 2, q) == 7.0);
  }
  SUBCASE("monotone in q") {
    for (int trial = 0; trial < 10; ++trial) {
      const auto panel = testing::random_panel(gen, 4, 4, 2, 25);
      const auto fit = fit_dsc(panel, config_with(50, static_cast<std::uint64_t>(trial)));
      for (int t : {3, 4}) {
        double prev = -INFINITY;
        for (double q : default_qte_grid()) {
          const double v = counterfactual_quantile(fit, panel, t, q);
          CHECK(v >= prev);
          prev = v;
        }
      }
    }
  }
  SUBCASE("errors") {
    const auto panel = testing::random_panel(gen, 2, 3, 2, 10);
    const auto fit = fit_dsc(panel, config_with(10));
    CHECK_THROWS_AS(counterfactual_quantile(fit, panel, 2, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(counterfactual_quantile(fit, panel, 3, 1.0), std::domain_error);
  }
}

TEST_CASE("quantile treatment effects") {
  std::mt19937_64 gen(8);
  SUBCASE("placebo: treated post sample built from the counterfactual is flat zero") {
    const auto base = testing::random_panel(gen, 3, 4, 2, 60);
    const auto fit = fit_dsc(base, config_with(120));
    std::vector<std::vector<std::vector<double>>> cells(base.num_units());
    for (std::size_t u = 0; u < base.num_units(); ++u) {
      for (int t = 1; t <= 4; ++t) {
        const auto c = base.cell(u, t);
        cells[u].emplace_back(c.begin(), c.end());
      }
    }
    for (int t = 3; t <= 4; ++t) {
      // Treated order statistics = weighted control order statistics.
      std::vector<double> treated(60, 0.0);
      for (std::size_t j = 0; j < 3; ++j) {
        const auto fn = EmpiricalQuantileFn::fit(base.cell(j + 1, t));
        for (std::size_t i = 0; i < 60; ++i) treated[i] += fit.aggregated[j] * fn.sorted_sample()[i];
      }
      cells[0][static_cast<std::size_t>(t - 1)] = treated;
    }
    const PanelDataset placebo(base.unit_ids(), cells, 2);
    for (int t = 3; t <= 4; ++t) {
      const auto curve = qte_curve(fit, placebo, t, default_qte_grid());
      for (double v : curve.values) CHECK(std::fabs(v) <= 1e-10);
    }
  }
  SUBCASE("shifted copy of a control") {
    std::normal_distribution<double> z;
    std::vector<double> c2(41), c3(41);
    for (std::size_t i = 0; i < 41; ++i) c2[i] = z(gen), c3[i] = 2 + z(gen);
    std::vector<double> treated(c2);
    for (double& v : treated) v += 5.0;
    const auto panel = testing::constant_panel({treated, c2, c3}, 2, 1);
    auto fit = fit_dsc(panel, config_with(41));
    fit.aggregated = SimplexWeights::vertex(2, 0);
    const auto curve = qte_curve(fit, panel, 2, default_qte_grid());
    CHECK(curve.levels.size() == 99);
    CHECK(curve.period == 2);
    for (double v : curve.values) CHECK(v == doctest::Approx(5.0).epsilon(1e-14));
  }
  SUBCASE("median effect from order statistics on n = 5") {
    const auto panel = testing::constant_panel({{9, 1, 7, 3, 5}, {0, 8, 2, 6, 4}}, 2, 1);
    const auto fit = fit_dsc(panel, config_with(5));
    const auto curve = qte_curve(fit, panel, 2, std::vector<double>{0.5});
    CHECK(curve.values[0] == 5.0 - 4.0);
  }
  SUBCASE("grid checks") {
    const auto panel = testing::constant_panel({{1.0}, {2.0}}, 2, 1);
    const auto fit = fit_dsc(panel, config_with(3));
    CHECK_THROWS_AS(qte_curve(fit, panel, 2, std::vector<double>{0.5, 0.4}), std::invalid_argument);
    CHECK_THROWS_AS(qte_curve(fit, panel, 2, std::vector<double>{0.0}), std::domain_error);
    CHECK_THROWS_AS(qte_curve(fit, panel, 1, std::vector<double>{0.5}), std::invalid_argument);
  }
}

TEST_CASE("default QTE grid") {
  const auto g = default_qte_grid();
  CHECK(g.size() == 99);
  CHECK(g.front() == 0.01);
  CHECK(g[49] == 0.5);
  CHECK(g.back() == 0.99);
  CHECK_THROWS_AS(default_qte_grid(0), std::invalid_argument);
}

TEST_CASE("fit file formats") {
  std::mt19937_64 gen(9);
  const auto panel = testing::random_panel(gen, 3, 4, 2, 20);
  const auto fit = fit_dsc(panel, config_with(40, 77));
  const auto doc = fit_to_json(fit, panel);
  CHECK(doc["controls"] == nlohmann::json::array({2, 3, 4}));
  CHECK(doc["weights"].get<std::vector<double>>() == fit.aggregated.values());
  CHECK(doc["per_period_weights"]["2"].get<std::vector<double>>() == fit.per_period_weights[1].values());
  CHECK(doc["per_period_loss"]["1"].get<double>() == fit.per_period_loss[0]);
  CHECK(doc["lambdas"].get<std::vector<double>>() == std::vector<double>{0.5, 0.5});
  CHECK(doc["M"] == 40);
  CHECK(doc["seed"] == 77);

  const auto dir = testing::scratch_dir();
  write_fit_json(fit, panel, dir / "fit.json");
  const auto parsed = nlohmann::json::parse(testing::read_text(dir / "fit.json"));
  CHECK(parsed["weights"].get<std::vector<double>>() == fit.aggregated.values());

  const std::vector<QteCurve> curves{qte_curve(fit, panel, 3, default_qte_grid(3)),
                                     qte_curve(fit, panel, 4, default_qte_grid(3))};
  write_qte_csv(curves, dir / "qte.csv");
  const auto text = testing::read_text(dir / "qte.csv");
  CHECK(text.rfind("t,q,qte\n3,0.25,", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 7);
}

}  // TEST_SUITE
