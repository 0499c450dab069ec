#include <doctest.h>

#include <cmath>
#include <numbers>

#include "adesens/simulation.hpp"

using namespace adesens;

TEST_CASE("dose family names") {
  CHECK(to_string(DoseFamily::kGamma) == "gamma");
  CHECK(parse_dose_family("gaussian") == DoseFamily::kGaussian);
  CHECK_THROWS_AS(parse_dose_family("poisson"), ConfigError);
}

TEST_CASE("coefficient draws") {
  DgpSpec spec;
  CounterRng rng(1);
  double theta = 0, beta = 0, inter = 0, inter_sq = 0;
  const int draws = 4000;
  for (int i = 0; i < draws; ++i) {
    const DgpCoefficients c = draw_coefficients(spec, rng);
    REQUIRE(c.theta.size() == 5);
    theta += c.theta.sum();
    beta += c.beta.sum();
    inter += c.eta_ax.sum();
    inter_sq += c.eta_ax.squaredNorm();
  }
  const double m = 5.0 * draws;
  CHECK(std::abs(theta / m) < 0.05);
  CHECK(std::abs(beta / m + 1.0) < 0.05);
  CHECK(std::abs(inter / m) < 0.025);
  CHECK(inter_sq / m == doctest::Approx(0.25).epsilon(0.05));
}

TEST_CASE("simulated data shapes and supports") {
  for (DoseFamily dose : {DoseFamily::kGaussian, DoseFamily::kGamma}) {
    for (OutcomeType outcome : {OutcomeType::kContinuous, OutcomeType::kBinary}) {
      DgpSpec spec;
      spec.dose = dose;
      spec.outcome = outcome;
      spec.delta = 3.0;
      const SimulatedData sim = draw_dataset(spec, 3000, 5);
      CHECK(sim.data.size() == 3000);
      CHECK(sim.data.dim() == 5);
      CHECK(sim.data.outcome_type() == outcome);
      CHECK(sim.data.x().minCoeff() >= 0.0);
      CHECK(sim.data.x().maxCoeff() <= 1.0);
      CHECK(((sim.u.array() == 0.0) || (sim.u.array() == 1.0)).all());
      if (dose == DoseFamily::kGamma) CHECK(sim.data.a().minCoeff() > 0.0);
    }
  }
  CHECK_THROWS_AS(draw_dataset(DgpSpec{}, 0, 1), ConfigError);
}

TEST_CASE("draws are reproducible from the seed") {
  const SimulatedData a = draw_dataset(DgpSpec{}, 100, 9);
  const SimulatedData b = draw_dataset(DgpSpec{}, 100, 9);
  const SimulatedData c = draw_dataset(DgpSpec{}, 100, 10);
  CHECK(a.data.y() == b.data.y());
  CHECK(a.data.a() == b.data.a());
  CHECK(a.data.y() != c.data.y());
}

TEST_CASE("exposure mean shifts by zeta times the latent mean") {
  DgpSpec spec;
  spec.zeta = 1.5;
  CounterRng coef_rng(2);
  DgpCoefficients c = draw_coefficients(spec, coef_rng);
  c.theta.setZero();
  CounterRng rng(3);
  const SimulatedData sim = draw_dataset(spec, c, 100000, rng);
  const Eigen::ArrayXd a = sim.data.a().array();
  const double diff = a.mean() - spec.zeta * sim.u.mean();
  const double se = std::sqrt((a - a.mean()).square().mean() / a.size());
  CHECK(std::abs(diff) <= 3 * se);
}

TEST_CASE("null confounding leaves the exposure free of the latent") {
  DgpSpec spec;
  spec.zeta = 0.0;
  spec.delta = 0.0;
  CounterRng coef_rng(4);
  DgpCoefficients c = draw_coefficients(spec, coef_rng);
  c.theta.setZero();
  CounterRng rng(5);
  const SimulatedData sim = draw_dataset(spec, c, 50000, rng);
  double m1 = 0, m0 = 0;
  int n1 = 0;
  for (Eigen::Index i = 0; i < sim.data.size(); ++i) {
    if (sim.u[i] == 1.0) {
      m1 += sim.data.a()[i];
      ++n1;
    } else {
      m0 += sim.data.a()[i];
    }
  }
  const int n0 = static_cast<int>(sim.data.size()) - n1;
  CHECK(std::abs(m1 / n1 - m0 / n0) <= 3 * std::sqrt(1.0 / n1 + 1.0 / n0));
}

TEST_CASE("table gammas") {
  const auto g = table_gammas();
  REQUIRE(g.size() == 5);
  CHECK(g[0] == 0.0);
  CHECK(g[4] == std::numbers::ln2);
  CHECK(g[2] == 0.5 * std::numbers::ln2);
}

TEST_CASE("emit_table") {
  CHECK_THROWS_AS(emit_table(CoverageReport{}), DomainError);

  CoverageReport one;
  one.cells.push_back({DoseFamily::kGaussian, OutcomeType::kBinary, 2.0, 0.0, 10, 7, 0.7, 0.1, 0.5});
  const Table t = emit_table(one);
  CHECK(t.text ==
        "dose      outcome     delta         0\n"
        "gaussian  binary       2.00      0.70\n");
  CHECK(t.csv ==
        "dose,outcome,delta,gamma,coverage,reps,mean_width\n"
        "gaussian,binary,2,0.0000000000,0.7000,10,0.100000\n");

  CoverageReport full;
  for (DoseFamily dose : {DoseFamily::kGaussian, DoseFamily::kGamma}) {
    for (OutcomeType outcome : {OutcomeType::kContinuous, OutcomeType::kBinary}) {
      for (double delta : {2.0, 3.0, 4.0}) {
        for (double g : table_gammas()) {
          full.cells.push_back({dose, outcome, delta, g, 1, 1, 1.0, 0.0, 0.0});
        }
      }
    }
  }
  const Table ft = emit_table(full);
  int lines = 0;
  for (char ch : ft.text) lines += ch == '\n';
  CHECK(lines == 13);
  CHECK(ft.text.find("0.25ln2") != std::string::npos);
  CHECK(ft.text.find("1.00ln2") != std::string::npos);
}

TEST_CASE("coverage experiment") {
  DgpSpec spec;
  spec.zeta = 0.0;
  CoverageOptions options;
  options.n = 400;
  options.reps = 6;
  options.gammas = {0.0, 0.5};
  options.truth_mc = 1000;
  RunConfig config;

  const CoverageReport serial = coverage_experiment(spec, options, config);
  options.threads = 3;
  const CoverageReport parallel = coverage_experiment(spec, options, config);
  REQUIRE(serial.cells.size() == 2);
  CHECK(serial.failed_reps == 0);
  for (std::size_t k = 0; k < 2; ++k) {
    CHECK(serial.cells[k].reps == 6);
    CHECK(serial.cells[k].covered == parallel.cells[k].covered);
    CHECK(serial.cells[k].mean_width == parallel.cells[k].mean_width);
    CHECK(serial.cells[k].coverage >= 0.0);
    CHECK(serial.cells[k].coverage <= 1.0);
  }
  CHECK(serial.cells[1].mean_width > serial.cells[0].mean_width);
  CHECK(serial.cells[1].covered >= serial.cells[0].covered);
  CHECK(emit_table(serial).csv == emit_table(parallel).csv);

  options.reps = 0;
  CHECK_THROWS_AS(coverage_experiment(spec, options, config), ConfigError);
  options.reps = 1;
  options.gammas = {-0.1};
  CHECK_THROWS_AS(coverage_experiment(spec, options, config), ConfigError);
}

TEST_CASE("failed replications are reported") {
  DgpSpec spec;
  CoverageOptions options;
  options.n = 3;  // too few samples for five folds
  options.reps = 2;
  options.truth_mc = 10;
  CHECK_THROWS_AS(coverage_experiment(spec, options, RunConfig{}), NumericalError);
}
