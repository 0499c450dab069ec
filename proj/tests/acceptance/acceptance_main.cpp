// Acceptance gate.  Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails.

#include <Eigen/Core>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "adesens/bounds.hpp"
#include "adesens/inference.hpp"
#include "adesens/oracle.hpp"
#include "adesens/simulation.hpp"
#include "cli.hpp"

using namespace adesens;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double time_limit;  // seconds; 0 means none
  std::function<Outcome()> body;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

int threads() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

// ---------------------------------------------------------------- 1

Outcome oracle_equivalence() {
  const VerificationReport r = verify_propositions(1000, 200, 1);
  double binary_gap = 0.0, worst_ratio = 0.0;
  int binary = 0, continuous = 0, failed = 0;
  for (const VerificationLine& l : r.lines) {
    if (l.kind == "binary") {
      ++binary;
      binary_gap = std::max(binary_gap, l.gap);
      failed += l.gap > 1e-9;
    } else {
      ++continuous;
      worst_ratio = std::max(worst_ratio, l.gap / l.tolerance);
      failed += !l.pass;
    }
  }
  return {failed == 0 && binary == 1000 && continuous == 200,
          fmt("binary max gap %.2e, continuous max gap/tolerance %.3f, %g failures", binary_gap,
              worst_ratio, failed)};
}

// ---------------------------------------------------------------- 2

Outcome lse_sandwich() {
  double worst_sandwich = 0.0, worst_fd = 0.0;
  const double step = 1e-6;
  for (double t : {1.0, 10.0, 50.0}) {
    for (int i = 0; i <= 1000; ++i) {
      const double p = i / 1000.0;
      const double m = std::min(p, 1.0 - p);
      const double h = lse_h(p, t);
      worst_sandwich = std::max({worst_sandwich, h - m, (m - std::numbers::ln2 / t) - h});
      if (i > 0 && i < 1000) {
        const double fd = (lse_h(p + step, t) - lse_h(p - step, t)) / (2 * step);
        worst_fd = std::max(worst_fd, std::abs(lse_h_prime(p, t) - fd));
      }
    }
  }
  return {worst_sandwich <= 1e-15 && worst_fd <= 1e-6,
          fmt("sandwich excess %.2e, derivative error %.2e", worst_sandwich, worst_fd)};
}

// ---------------------------------------------------------------- 3

Outcome model_checks() {
  std::vector<double> grid;
  for (int i = 0; i <= 40; ++i) grid.push_back(-3.0 + 0.15 * i);
  const ModelReport r =
      verify_model_implication(RosenbaumModel::standard_normal(std::numbers::ln2), grid, 0.0);
  std::string detail;
  bool pass = r.checks.size() == 4;
  for (const ModelCheck& c : r.checks) {
    pass = pass && c.pass;
    detail += c.check + " " + fmt("%.1e", c.max_violation) + " ";
  }
  RosenbaumModel broken = RosenbaumModel::standard_normal(std::numbers::ln2);
  broken.normalizer_scale = 1.05;
  const bool control_fails = !verify_model_implication(broken, grid, 0.0).all_pass();
  detail += control_fails ? "; negative control rejected" : "; negative control NOT rejected";
  return {pass && control_fails, detail};
}

// ---------------------------------------------------------------- 4

Outcome score_identity_at_scale() {
  DgpSpec spec;
  spec.delta = 2.0;
  CounterRng rng(7);
  const DgpCoefficients c = draw_coefficients(spec, rng);
  const IdentityCheck check = check_score_identity(spec, c, 1'000'000, 7);
  return {check.pass, fmt("analytic %.5f, Monte Carlo %.5f, se %.5f, |z| %.2f", check.analytic,
                          check.monte_carlo, check.se,
                          std::abs(check.analytic - check.monte_carlo) / check.se)};
}

// ---------------------------------------------------------------- 5

Outcome unconfounded_coverage() {
  DgpSpec spec;
  spec.zeta = 0.0;
  spec.delta = 0.0;
  CoverageOptions options;
  options.reps = 500;
  options.gammas = {0.0};
  options.threads = threads();
  const CoverageReport r = coverage_experiment(spec, options, RunConfig{});
  const CoverageCell& cell = r.cells.front();
  return {cell.coverage >= 0.92 && cell.coverage <= 0.98 && r.failed_reps == 0,
          fmt("coverage %.3f over %g reps, %g failed", cell.coverage, cell.reps, r.failed_reps)};
}

// ---------------------------------------------------------------- 6

Outcome table_pattern() {
  CoverageOptions options;
  options.reps = 200;
  options.threads = threads();

  DgpSpec cont;
  cont.delta = 4.0;
  const CoverageReport rc = coverage_experiment(cont, options, RunConfig{});
  DgpSpec bin;
  bin.outcome = OutcomeType::kBinary;
  bin.delta = 2.0;
  RunConfig bin_config;
  bin_config.outcome_type = OutcomeType::kBinary;
  const CoverageReport rb = coverage_experiment(bin, options, bin_config);

  bool cont_ok = rc.cells[0].coverage <= 0.20;
  for (int k = 2; k < 5; ++k) cont_ok = cont_ok && rc.cells[k].coverage >= 0.95;
  bool bin_ok = std::abs(rb.cells[0].coverage - 0.68) <= 0.15;
  for (int k = 2; k < 5; ++k) bin_ok = bin_ok && rb.cells[k].coverage >= 0.90;

  std::string detail = "continuous d=4:";
  for (const CoverageCell& c : rc.cells) detail += fmt(" %.2f", c.coverage);
  detail += cont_ok ? " ok" : " MISS";
  detail += "; binary d=2:";
  for (const CoverageCell& c : rb.cells) detail += fmt(" %.2f", c.coverage);
  detail += bin_ok ? " ok" : " MISS (gamma=0 target 0.68 +/- 0.15)";
  return {cont_ok && bin_ok && rc.failed_reps == 0 && rb.failed_reps == 0, detail};
}

// ---------------------------------------------------------------- 7

Outcome inference_algebra() {
  double width_err = 0.0, shift_err = 0.0;
  int nesting_violations = 0;
  const GammaGrid grid(0.0, 2.0, 41);
  for (OutcomeType type : {OutcomeType::kContinuous, OutcomeType::kBinary}) {
    DgpSpec spec;
    spec.outcome = type;
    spec.delta = 2.0;
    RunConfig config;
    config.outcome_type = type;
    const SimulatedData sim = draw_dataset(spec, 1500, 3);
    const EifDecomposition eif = cross_fit_eif(sim.data, config);
    const SensitivityCurve curve =
        sensitivity_curve(eif, grid, config.alpha, type, config.lse_t);
    for (std::size_t i = 0; i < curve.estimates.size(); ++i) {
      const BoundEstimate& e = curve.estimates[i];
      const double scale = 1.0 + std::abs(e.psi_max_hat) + std::abs(e.psi_min_hat);
      width_err = std::max(width_err, std::abs((e.psi_max_hat - e.psi_min_hat) -
                                               2 * e.gamma * curve.b_hat) / scale);
      nesting_violations += curve.sim_lower[i] > e.ci_lower || curve.sim_upper[i] < e.ci_upper;
      if (type == OutcomeType::kBinary) {
        const BoundEstimate wald =
            estimate_bounds(eif, e.gamma, config.alpha, OutcomeType::kContinuous, config.lse_t);
        const double shift = std::numbers::ln2 / config.lse_t;
        shift_err = std::max({shift_err, std::abs((wald.ci_lower - e.ci_lower) - shift),
                              std::abs((e.ci_upper - wald.ci_upper) - shift)});
      }
    }
  }
  return {width_err <= 1e-13 && shift_err <= 1e-13 && nesting_violations == 0,
          fmt("width error %.1e, binary shift error %.1e, %g nesting violations", width_err,
              shift_err, nesting_violations)};
}

// ---------------------------------------------------------------- 8

// Influence terms with exactly the requested means and per-sample standard
// deviations.
EifDecomposition fixture(int n, double a, double b, double sd_a, double sd_b, std::uint64_t seed) {
  CounterRng rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  Eigen::ArrayXd u(n), v(n);
  for (int i = 0; i < n; ++i) {
    u[i] = z(rng);
    v[i] = z(rng);
  }
  auto standardize = [](Eigen::ArrayXd x) {
    x -= x.mean();
    return (x / std::sqrt(x.square().mean())).eval();
  };
  return {(a + sd_a * standardize(u)).matrix(), (b + sd_b * standardize(v)).matrix()};
}

Outcome crossing_fixtures() {
  const double a = 0.108, b = 0.108 / 0.323;
  const int n = 5219;
  // The interval [0.075, 0.141] fixes the standard error of a.
  const double sd_a = 0.033 / 1.959963984540054 * std::sqrt(n);
  std::string detail;
  bool pass = true;
  for (double sd_b : {0.5, 2.0, 6.0}) {
    const EifDecomposition eif = fixture(n, a, b, sd_a, sd_b, 11);
    const SensitivityCurve c =
        sensitivity_curve(eif, GammaGrid(0, 1, 11), 0.05, OutcomeType::kBinary, 50.0);
    if (!c.crossings.point || !c.crossings.pointwise || !c.crossings.simultaneous) {
      return {false, "missing crossing"};
    }
    const double point = *c.crossings.point, pw = *c.crossings.pointwise,
                 sim = *c.crossings.simultaneous;
    pass = pass && std::abs(point - 0.323) <= 1e-6 && sim <= pw && pw <= point;
    detail += fmt("[%.4f <= %.4f <= %.6f] ", sim, pw, point);
  }
  // Mirror image: a negative effect crossing from below.
  const EifDecomposition neg = fixture(n, -a, b, sd_a, 1.0, 12);
  const SensitivityCurve c =
      sensitivity_curve(neg, GammaGrid(0, 1, 11), 0.05, OutcomeType::kContinuous, 50.0);
  pass = pass && c.crossings.point && std::abs(*c.crossings.point - 0.323) <= 1e-6 &&
         *c.crossings.simultaneous <= *c.crossings.pointwise &&
         *c.crossings.pointwise <= *c.crossings.point;
  detail += fmt("mirrored point %.6f", c.crossings.point.value_or(NAN));
  return {pass, detail};
}

// ---------------------------------------------------------------- 9

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

Outcome determinism() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "adesens_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  {
    DgpSpec spec;
    spec.delta = 2.0;
    std::ofstream f(dir / "toy.csv");
    write_csv(f, draw_dataset(spec, 500, 5).data);
  }
  auto path = [&](const std::string& f) { return (dir / f).string(); };

  // Each command runs twice; stdout and the files it writes are compared.
  struct Command {
    std::string name;
    std::vector<std::string> args;
    std::vector<std::string> files;
  };
  const std::vector<Command> commands = {
      {"analyze",
       {"analyze", "--data", path("toy.csv"), "--seed", "9", "--out", path("run")},
       {"run.json", "run.csv"}},
      {"simulate",
       {"simulate", "--reps", "3", "--n", "300", "--truth-mc", "1000", "--seed", "9", "--out",
        path("cov.csv")},
       {"cov.csv"}},
      {"verify-bounds", {"verify-bounds", "--instances", "200", "--continuous", "10"}, {}},
      {"verify-model", {"verify-model"}, {}},
      {"ground-truth", {"ground-truth", "--outcome", "binary", "--n-mc", "10000"}, {}},
  };

  std::string detail;
  bool pass = true;
  for (const Command& cmd : commands) {
    std::string outputs[2];
    int codes[2];
    for (int run = 0; run < 2; ++run) {
      std::vector<std::string> args{"adesens"};
      args.insert(args.end(), cmd.args.begin(), cmd.args.end());
      std::ostringstream out, err;
      codes[run] = cli::run(args, out, err);
      outputs[run] = out.str();
      for (const std::string& f : cmd.files) {
        outputs[run] += slurp(dir / f);
        fs::remove(dir / f);
      }
    }
    const bool same = codes[0] == 0 && codes[1] == 0 && outputs[0] == outputs[1] &&
                      !outputs[0].empty();
    pass = pass && same;
    detail += cmd.name + (same ? " identical; " : " DIFFERS; ");
  }
  fs::remove_all(dir);
  return {pass, detail};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "oracle equivalence", 10.0, oracle_equivalence},
      {2, "LSE sandwich and derivative", 1.0, lse_sandwich},
      {3, "Rosenbaum construction checks", 30.0, model_checks},
      {4, "score identity at 1e6 draws", 0.0, score_identity_at_scale},
      {5, "unconfounded coverage", 0.0, unconfounded_coverage},
      {6, "coverage pattern over gamma", 0.0, table_pattern},
      {7, "inference algebra", 0.0, inference_algebra},
      {8, "crossing fixtures", 0.0, crossing_fixtures},
      {9, "CLI determinism", 0.0, determinism},
  };

  int failed = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.body();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.time_limit > 0 && secs >= c.time_limit) {
      o.pass = false;
      o.detail += fmt("; over the %.0f s limit", c.time_limit);
    }
    failed += !o.pass;
    std::printf("[%s] %d %s (%.2f s): %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name.c_str(), secs,
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
