#include "adesens/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <thread>
#include <tuple>

#include "adesens/inference.hpp"
#include "adesens/normal.hpp"
#include "adesens/oracle.hpp"

namespace adesens {

std::string_view to_string(DoseFamily family) {
  return family == DoseFamily::kGamma ? "gamma" : "gaussian";
}

DoseFamily parse_dose_family(std::string_view text) {
  if (text == "gaussian") return DoseFamily::kGaussian;
  if (text == "gamma") return DoseFamily::kGamma;
  throw ConfigError("unknown dose family '" + std::string(text) +
                    "' (expected gaussian or gamma)");
}

DgpCoefficients draw_coefficients(const DgpSpec& spec, CounterRng& rng) {
  std::normal_distribution<double> theta(0.0, 1.0);
  std::normal_distribution<double> beta(-1.0, 1.0);
  std::normal_distribution<double> eta_ax(0.0, 0.5);
  DgpCoefficients c;
  c.theta.resize(spec.dim);
  c.beta.resize(spec.dim);
  c.eta_ax.resize(spec.dim);
  for (int j = 0; j < spec.dim; ++j) c.theta[j] = theta(rng);
  for (int j = 0; j < spec.dim; ++j) c.beta[j] = beta(rng);
  for (int j = 0; j < spec.dim; ++j) c.eta_ax[j] = eta_ax(rng);
  return c;
}

double outcome_index(const DgpSpec& spec, const DgpCoefficients& c, double a,
                     CovariateRow x, double u) {
  return spec.eta * a + x.dot(c.beta.transpose()) + spec.delta * u +
         a * x.dot(c.eta_ax.transpose());
}

SimulatedData draw_dataset(const DgpSpec& spec, const DgpCoefficients& coefficients,
                           Eigen::Index n, CounterRng& rng) {
  if (n < 1) throw ConfigError("simulated sample size must be >= 1");
  if (spec.dim < 2) throw ConfigError("the design needs at least two covariates");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  Eigen::VectorXd y(n), a(n), u(n);
  CovariateMatrix x(n, spec.dim);
  int floored = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int j = 0; j < spec.dim; ++j) x(i, j) = unit(rng);
    u[i] = unit(rng) < normal_cdf(std::sin(x(i, 0) + x(i, 1))) ? 1.0 : 0.0;
    const double lin = x.row(i).dot(coefficients.theta.transpose());
    if (spec.dose == DoseFamily::kGaussian) {
      a[i] = lin + spec.zeta * u[i] + normal(rng);
    } else {
      double rate = kGammaRateBase + lin - spec.zeta * u[i];
      if (rate < kGammaRateFloor) {
        rate = kGammaRateFloor;
        ++floored;
      }
      std::gamma_distribution<double> gamma(kGammaShape, 1.0 / rate);
      a[i] = gamma(rng);
    }
    const double index = outcome_index(spec, coefficients, a[i], x.row(i), u[i]);
    if (spec.outcome == OutcomeType::kContinuous) {
      y[i] = index + normal(rng);
    } else {
      y[i] = index + normal(rng) > 0.0 ? 1.0 : 0.0;
    }
  }
  return {Dataset(std::move(y), std::move(a), std::move(x), spec.outcome), std::move(u),
          coefficients, floored};
}

SimulatedData draw_dataset(const DgpSpec& spec, Eigen::Index n, std::uint64_t seed) {
  const CounterRng root(seed);
  CounterRng coef_rng = root.split(1);
  CounterRng data_rng = root.split(2);
  const DgpCoefficients c = draw_coefficients(spec, coef_rng);
  return draw_dataset(spec, c, n, data_rng);
}

std::vector<double> table_gammas() {
  const double l = std::numbers::ln2;
  return {0.0, 0.25 * l, 0.5 * l, 0.75 * l, l};
}

namespace {

struct RepResult {
  bool ok = false;
  std::string error;
  std::vector<bool> covered;
  std::vector<double> width;
  double runtime = 0.0;
  int floored = 0;
};

RepResult run_replication(const DgpSpec& spec, const CoverageOptions& options,
                          const RunConfig& base_config, const std::vector<double>& gammas,
                          int rep) {
  RepResult out;
  const auto start = std::chrono::steady_clock::now();
  try {
    const CounterRng rep_rng = CounterRng(options.seed).split(static_cast<std::uint64_t>(rep));
    CounterRng coef_rng = rep_rng.split(1);
    CounterRng data_rng = rep_rng.split(2);
    const DgpCoefficients c = draw_coefficients(spec, coef_rng);
    const SimulatedData sim = draw_dataset(spec, c, options.n, data_rng);
    out.floored = sim.floored_rates;
    const double truth =
        ground_truth_ade(spec, c, options.truth_mc, rep_rng.split(3)());

    RunConfig config = base_config;
    config.outcome_type = spec.outcome;
    config.seed = rep_rng.split(4)();
    const EifDecomposition eif = cross_fit_eif(sim.data, config);
    for (double g : gammas) {
      const BoundEstimate est =
          estimate_bounds(eif, g, config.alpha / 2.0, spec.outcome, config.lse_t);
      out.covered.push_back(est.ci_lower <= truth && truth <= est.ci_upper);
      out.width.push_back(est.ci_upper - est.ci_lower);
    }
    out.ok = true;
  } catch (const Error& e) {
    out.error = "replication " + std::to_string(rep) + ": " + e.what();
  }
  out.runtime =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace

CoverageReport coverage_experiment(const DgpSpec& spec, const CoverageOptions& options,
                                   const RunConfig& config) {
  if (options.reps < 1) throw ConfigError("reps must be >= 1");
  if (options.threads < 1) throw ConfigError("threads must be >= 1");
  config.validate();
  const std::vector<double> gammas = options.gammas.empty() ? table_gammas() : options.gammas;
  for (double g : gammas) {
    if (!(g >= 0.0)) throw ConfigError("gamma values must be >= 0");
  }

  std::vector<RepResult> results(options.reps);
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int r = next++; r < options.reps; r = next++) {
      results[r] = run_replication(spec, options, config, gammas, r);
    }
  };
  const int n_threads = std::min(options.threads, options.reps);
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  CoverageReport report;
  std::vector<CoverageCell> cells(gammas.size());
  for (std::size_t k = 0; k < gammas.size(); ++k) {
    cells[k].dose = spec.dose;
    cells[k].outcome = spec.outcome;
    cells[k].delta = spec.delta;
    cells[k].gamma = gammas[k];
  }
  double runtime = 0.0;
  for (const RepResult& r : results) {
    report.floored_rates += r.floored;
    runtime += r.runtime;
    if (!r.ok) {
      ++report.failed_reps;
      report.failures.push_back(r.error);
      continue;
    }
    for (std::size_t k = 0; k < gammas.size(); ++k) {
      ++cells[k].reps;
      cells[k].covered += r.covered[k] ? 1 : 0;
      cells[k].mean_width += r.width[k];
    }
  }
  if (report.failed_reps == options.reps) {
    throw NumericalError("all replications failed; first error: " + report.failures.front());
  }
  for (CoverageCell& cell : cells) {
    cell.coverage = static_cast<double>(cell.covered) / cell.reps;
    cell.mean_width /= cell.reps;
    cell.mean_runtime = runtime / options.reps;
  }
  report.cells = std::move(cells);
  return report;
}

void append(CoverageReport& into, const CoverageReport& from) {
  into.cells.insert(into.cells.end(), from.cells.begin(), from.cells.end());
  into.failed_reps += from.failed_reps;
  into.failures.insert(into.failures.end(), from.failures.begin(), from.failures.end());
  into.floored_rates += from.floored_rates;
}

namespace {

std::string format(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

std::string gamma_label(double g) {
  const double k = g / std::numbers::ln2;
  if (g == 0.0) return "0";
  if (std::abs(k - std::round(k * 100.0) / 100.0) < 1e-9) return format("%.2fln2", k);
  return format("%.4f", g);
}

}  // namespace

Table emit_table(const CoverageReport& report) {
  if (report.cells.empty()) throw DomainError("coverage report is empty");

  using RowKey = std::tuple<int, int, double>;
  std::vector<RowKey> rows;
  std::vector<double> gammas;
  std::map<std::pair<std::size_t, std::size_t>, const CoverageCell*> lookup;
  for (const CoverageCell& cell : report.cells) {
    const RowKey key{static_cast<int>(cell.dose), static_cast<int>(cell.outcome), cell.delta};
    auto row = std::find(rows.begin(), rows.end(), key);
    if (row == rows.end()) row = rows.insert(rows.end(), key);
    auto col = std::find(gammas.begin(), gammas.end(), cell.gamma);
    if (col == gammas.end()) col = gammas.insert(gammas.end(), cell.gamma);
    lookup[{static_cast<std::size_t>(row - rows.begin()),
            static_cast<std::size_t>(col - gammas.begin())}] = &cell;
  }

  std::ostringstream text;
  text << "dose      outcome     delta";
  for (double g : gammas) {
    std::string label = gamma_label(g);
    text << ' ' << std::string(label.size() < 9 ? 9 - label.size() : 0, ' ') << label;
  }
  text << '\n';
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& [dose, outcome, delta] = rows[r];
    char head[64];
    std::snprintf(head, sizeof head, "%-9s %-11s %5.2f",
                  std::string(to_string(static_cast<DoseFamily>(dose))).c_str(),
                  std::string(to_string(static_cast<OutcomeType>(outcome))).c_str(), delta);
    text << head;
    for (std::size_t c = 0; c < gammas.size(); ++c) {
      auto it = lookup.find({r, c});
      text << ' ' << (it == lookup.end() ? std::string("        -")
                                          : format("%9.2f", it->second->coverage));
    }
    text << '\n';
  }

  std::ostringstream csv;
  csv << "dose,outcome,delta,gamma,coverage,reps,mean_width\n";
  for (const CoverageCell& cell : report.cells) {
    csv << to_string(cell.dose) << ',' << to_string(cell.outcome) << ','
        << format("%.6g", cell.delta) << ',' << format("%.10f", cell.gamma) << ','
        << format("%.4f", cell.coverage) << ',' << cell.reps << ','
        << format("%.6f", cell.mean_width) << '\n';
  }
  return {text.str(), csv.str()};
}

}  // namespace adesens
