#include "cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "adesens/data.hpp"
#include "adesens/inference.hpp"
#include "adesens/oracle.hpp"
#include "adesens/report.hpp"
#include "adesens/simulation.hpp"

namespace adesens::cli {

namespace {

struct AnalyzeArgs {
  std::string data;
  std::string outcome;
  std::string config;
  double gamma_min = 0.0;
  double gamma_max = 1.0;
  int points = 101;
  double reference = 0.0;
  std::uint64_t seed = 0;
  std::string out = "curve";
};

struct SimulateArgs {
  std::string dose = "gaussian";
  std::string outcome = "continuous";
  double delta = 0.0;
  double zeta = std::numbers::ln2;
  double eta = 1.0;
  int reps = 200;
  long n = 2000;
  std::uint64_t seed = 20240601;
  std::string out = "coverage.csv";
  std::string config;
  int threads = 1;
  long truth_mc = 1'000'000;
};

struct VerifyBoundsArgs {
  int instances = 1000;
  int continuous = 0;
  std::uint64_t seed = 1;
  std::string out;
};

struct VerifyModelArgs {
  double gamma_r = std::numbers::ln2;
  double normalizer_scale = 1.0;
  std::string out;
};

struct GroundTruthArgs {
  std::string dose = "gaussian";
  std::string outcome = "continuous";
  double delta = 0.0;
  double zeta = std::numbers::ln2;
  double eta = 1.0;
  long n_mc = 1'000'000;
  std::uint64_t seed = 20240601;
};

std::ofstream open_output(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write '" + path + "'");
  return f;
}

// Writes to the named file, or to `fallback` when the path is empty.
template <typename Writer>
void emit(const std::string& path, std::ostream& fallback, Writer&& write) {
  if (path.empty()) {
    write(fallback);
    return;
  }
  std::ofstream f = open_output(path);
  write(f);
}

int do_analyze(const AnalyzeArgs& args, bool seed_given, std::ostream& out) {
  RunConfig config;
  if (!args.config.empty()) {
    config = load_config(args.config, ConfigScope::kAnalysis).run;
  }
  if (!args.outcome.empty()) config.outcome_type = parse_outcome_type(args.outcome);
  if (seed_given) config.seed = args.seed;
  config.validate();
  const GammaGrid grid(args.gamma_min, args.gamma_max, args.points);
  const Dataset data = load_csv(args.data, config.outcome_type);
  const SensitivityCurve curve = analyze(data, config, grid, nullptr, args.reference);

  std::ofstream json = open_output(args.out + ".json");
  write_curve_json(json, curve);
  std::ofstream csv = open_output(args.out + ".csv");
  write_curve_csv(csv, curve);
  out << "wrote " << args.out << ".json and " << args.out << ".csv (" << grid.size()
      << " grid points)\n";
  return kOk;
}

int do_simulate(const SimulateArgs& args, const CLI::App& cmd, std::ostream& out,
                std::ostream& err) {
  ConfigFile file;
  if (!args.config.empty()) file = load_config(args.config, ConfigScope::kSimulation);
  const SimulationKeys& keys = file.simulation;
  auto given = [&](const char* flag) { return cmd.count(flag) > 0; };

  DgpSpec spec;
  spec.dose = parse_dose_family(given("--dose") || !keys.dose ? args.dose : *keys.dose);
  spec.outcome = parse_outcome_type(args.outcome);
  if (!given("--outcome") && !args.config.empty()) spec.outcome = file.run.outcome_type;
  spec.delta = given("--delta") || !keys.delta ? args.delta : *keys.delta;
  spec.zeta = given("--zeta") || !keys.zeta ? args.zeta : *keys.zeta;
  spec.eta = given("--eta") || !keys.eta ? args.eta : *keys.eta;

  CoverageOptions options;
  options.n = given("--n") || !keys.n ? args.n : *keys.n;
  options.reps = given("--reps") || !keys.reps ? args.reps : *keys.reps;
  options.seed = args.seed;
  options.threads = args.threads;
  options.truth_mc = args.truth_mc;

  RunConfig config = file.run;
  config.outcome_type = spec.outcome;
  const CoverageReport report = coverage_experiment(spec, options, config);
  const Table table = emit_table(report);
  std::ofstream csv = open_output(args.out);
  csv << table.csv;
  out << table.text;
  if (report.floored_rates > 0) {
    err << "note: " << report.floored_rates << " Gamma rates were raised to the floor "
        << kGammaRateFloor << '\n';
  }
  if (report.failed_reps > 0) {
    err << report.failed_reps << " replication(s) failed:\n";
    for (const auto& f : report.failures) err << "  " << f << '\n';
  }
  return kOk;
}

int do_verify_bounds(const VerifyBoundsArgs& args, std::ostream& out, std::ostream& err) {
  const VerificationReport report =
      verify_propositions(args.instances, args.continuous, args.seed);
  emit(args.out, out, [&](std::ostream& s) { write_verification_jsonl(s, report); });
  if (!report.all_pass()) {
    for (const auto& l : report.lines) {
      if (!l.pass) {
        err << "instance " << l.instance_id << " (" << l.kind << "): gap " << l.gap
            << " exceeds " << l.tolerance << '\n';
      }
    }
    return kVerificationFailed;
  }
  return kOk;
}

int do_verify_model(const VerifyModelArgs& args, std::ostream& out, std::ostream& err) {
  RosenbaumModel model = RosenbaumModel::standard_normal(args.gamma_r);
  model.normalizer_scale = args.normalizer_scale;
  std::vector<double> a_grid;
  for (int i = 0; i <= 40; ++i) a_grid.push_back(-3.0 + 0.15 * i);
  const ModelReport report = verify_model_implication(model, a_grid, 0.0);
  emit(args.out, out, [&](std::ostream& s) { write_model_jsonl(s, report); });
  if (!report.all_pass()) {
    for (const auto& c : report.checks) {
      if (!c.pass) {
        err << c.check << " violated by " << c.max_violation << " at a=" << c.worst_a
            << ", a'=" << c.worst_a_prime << ", u=" << c.worst_u << '\n';
      }
    }
    return kVerificationFailed;
  }
  return kOk;
}

int do_ground_truth(const GroundTruthArgs& args, std::ostream& out) {
  DgpSpec spec;
  spec.dose = parse_dose_family(args.dose);
  spec.outcome = parse_outcome_type(args.outcome);
  spec.delta = args.delta;
  spec.zeta = args.zeta;
  spec.eta = args.eta;
  CounterRng coef_rng = CounterRng(args.seed).split(1);
  const DgpCoefficients c = draw_coefficients(spec, coef_rng);
  const MonteCarloMean mc = monte_carlo_ade(spec, c, args.n_mc, CounterRng(args.seed).split(3)());
  const double truth = spec.outcome == OutcomeType::kContinuous
                           ? ground_truth_ade(spec, c, args.n_mc, 0)
                           : mc.mean;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "{\"truth\": %.17g, \"monte_carlo\": %.17g, \"se\": %.17g, \"n_mc\": %ld}\n",
                truth, mc.mean, mc.se, args.n_mc);
  out << buf;
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sensitivity analysis for the average derivative effect", "adesens"};
  app.require_subcommand(1, 1);

  AnalyzeArgs analyze_args;
  auto* analyze_cmd = app.add_subcommand("analyze", "bounds and confidence bands over a gamma grid");
  analyze_cmd->add_option("--data", analyze_args.data, "CSV with columns y, a, x1..xd")
      ->required();
  analyze_cmd->add_option("--outcome", analyze_args.outcome, "continuous or binary")
      ->check(CLI::IsMember({"continuous", "binary"}));
  analyze_cmd->add_option("--config", analyze_args.config, "key=value run configuration");
  analyze_cmd->add_option("--gamma-min", analyze_args.gamma_min, "smallest gamma")
      ->capture_default_str();
  analyze_cmd->add_option("--gamma-max", analyze_args.gamma_max, "largest gamma")
      ->capture_default_str();
  analyze_cmd->add_option("--points", analyze_args.points, "grid size")->capture_default_str();
  analyze_cmd->add_option("--reference", analyze_args.reference, "reference value for crossings")
      ->capture_default_str();
  analyze_cmd->add_option("--seed", analyze_args.seed, "fold assignment seed");
  analyze_cmd->add_option("--out", analyze_args.out, "output prefix for .json and .csv")
      ->capture_default_str();

  SimulateArgs sim_args;
  auto* sim_cmd = app.add_subcommand("simulate", "coverage experiment on the synthetic design");
  sim_cmd->add_option("--dose", sim_args.dose, "gaussian or gamma")
      ->check(CLI::IsMember({"gaussian", "gamma"}))
      ->capture_default_str();
  sim_cmd->add_option("--outcome", sim_args.outcome, "continuous or binary")
      ->check(CLI::IsMember({"continuous", "binary"}))
      ->capture_default_str();
  sim_cmd->add_option("--delta", sim_args.delta, "U -> Y strength")->capture_default_str();
  sim_cmd->add_option("--zeta", sim_args.zeta, "U -> A strength")->capture_default_str();
  sim_cmd->add_option("--eta", sim_args.eta, "exposure coefficient")->capture_default_str();
  sim_cmd->add_option("--reps", sim_args.reps, "replications")->capture_default_str();
  sim_cmd->add_option("--n", sim_args.n, "samples per replication")->capture_default_str();
  sim_cmd->add_option("--seed", sim_args.seed, "master seed")->capture_default_str();
  sim_cmd->add_option("--out", sim_args.out, "CSV output path")->capture_default_str();
  sim_cmd->add_option("--config", sim_args.config, "key=value configuration");
  sim_cmd->add_option("--threads", sim_args.threads, "worker threads")->capture_default_str();
  sim_cmd->add_option("--truth-mc", sim_args.truth_mc, "Monte Carlo draws for binary truth")
      ->capture_default_str();

  VerifyBoundsArgs vb_args;
  auto* vb_cmd = app.add_subcommand("verify-bounds", "compare the stratum LP with the closed forms");
  vb_cmd->add_option("--instances", vb_args.instances, "binary instances")->capture_default_str();
  vb_cmd->add_option("--continuous", vb_args.continuous, "gridded continuous instances")
      ->capture_default_str();
  vb_cmd->add_option("--seed", vb_args.seed, "seed")->capture_default_str();
  vb_cmd->add_option("--out", vb_args.out, "JSON-lines output (default stdout)");

  VerifyModelArgs vm_args;
  auto* vm_cmd = app.add_subcommand("verify-model", "numeric checks of the Rosenbaum construction");
  vm_cmd->add_option("--gamma-r", vm_args.gamma_r, "Rosenbaum parameter")->capture_default_str();
  vm_cmd->add_option("--normalizer-scale", vm_args.normalizer_scale,
                     "multiply the normalizers (1 is correct)")
      ->capture_default_str();
  vm_cmd->add_option("--out", vm_args.out, "JSON-lines output (default stdout)");

  GroundTruthArgs gt_args;
  auto* gt_cmd = app.add_subcommand("ground-truth", "true ADE for one coefficient draw");
  gt_cmd->add_option("--dose", gt_args.dose, "gaussian or gamma")
      ->check(CLI::IsMember({"gaussian", "gamma"}))
      ->capture_default_str();
  gt_cmd->add_option("--outcome", gt_args.outcome, "continuous or binary")
      ->check(CLI::IsMember({"continuous", "binary"}))
      ->capture_default_str();
  gt_cmd->add_option("--delta", gt_args.delta, "U -> Y strength")->capture_default_str();
  gt_cmd->add_option("--zeta", gt_args.zeta, "U -> A strength")->capture_default_str();
  gt_cmd->add_option("--eta", gt_args.eta, "exposure coefficient")->capture_default_str();
  gt_cmd->add_option("--n-mc", gt_args.n_mc, "Monte Carlo draws")->capture_default_str();
  gt_cmd->add_option("--seed", gt_args.seed, "seed")->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }

  try {
    if (*analyze_cmd) return do_analyze(analyze_args, analyze_cmd->count("--seed") > 0, out);
    if (*sim_cmd) return do_simulate(sim_args, *sim_cmd, out, err);
    if (*vb_cmd) return do_verify_bounds(vb_args, out, err);
    if (*vm_cmd) return do_verify_model(vm_args, out, err);
    if (*gt_cmd) return do_ground_truth(gt_args, out);
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    return kUsage;
  } catch (const ParseError& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const DomainError& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return kDataError;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kUsage;
}

}  // namespace adesens::cli
