#ifndef ADESENS_SIMULATION_HPP_
#define ADESENS_SIMULATION_HPP_

#include <Eigen/Core>

#include <cstdint>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "adesens/data.hpp"
#include "adesens/rng.hpp"
#include "adesens/types.hpp"

namespace adesens {

enum class DoseFamily { kGaussian, kGamma };

std::string_view to_string(DoseFamily family);
DoseFamily parse_dose_family(std::string_view text);

// Synthetic design with X ~ U[0,1]^d, a binary latent U driven by X, a
// Gaussian or Gamma exposure shifted by zeta U, and an outcome loading delta
// on U.
struct DgpSpec {
  DoseFamily dose = DoseFamily::kGaussian;
  OutcomeType outcome = OutcomeType::kContinuous;
  double delta = 0.0;
  double zeta = std::numbers::ln2;
  double eta = 1.0;
  int dim = 5;
};

// Coefficients redrawn for every replication.
struct DgpCoefficients {
  Eigen::VectorXd theta;   // exposure on X, N(0, 1)
  Eigen::VectorXd beta;    // outcome on X, N(-1, 1)
  Eigen::VectorXd eta_ax;  // exposure-covariate interaction, N(0, 1/4)
};

DgpCoefficients draw_coefficients(const DgpSpec& spec, CounterRng& rng);

struct SimulatedData {
  Dataset data;
  Eigen::VectorXd u;
  DgpCoefficients coefficients;
  int floored_rates = 0;  // Gamma draws whose rate was raised to the floor
};

inline constexpr double kGammaShape = 13.0;
inline constexpr double kGammaRateBase = 8.0;
inline constexpr double kGammaRateFloor = 0.1;

// Draws coefficients, then n samples, from one seed.
SimulatedData draw_dataset(const DgpSpec& spec, Eigen::Index n, std::uint64_t seed);
// Draws n samples with the given coefficients.
SimulatedData draw_dataset(const DgpSpec& spec, const DgpCoefficients& coefficients,
                           Eigen::Index n, CounterRng& rng);

// Linear index of the outcome model without noise.
double outcome_index(const DgpSpec& spec, const DgpCoefficients& c, double a,
                     CovariateRow x, double u);

struct CoverageOptions {
  Eigen::Index n = 2000;
  int reps = 200;
  std::vector<double> gammas;  // empty means {0, .25, .5, .75, 1} * ln 2
  std::uint64_t seed = 20240601;
  long truth_mc = 1'000'000;
  int threads = 1;
};

struct CoverageCell {
  DoseFamily dose = DoseFamily::kGaussian;
  OutcomeType outcome = OutcomeType::kContinuous;
  double delta = 0.0;
  double gamma = 0.0;
  int reps = 0;
  int covered = 0;
  double coverage = 0.0;
  double mean_width = 0.0;
  double mean_runtime = 0.0;  // seconds per replication; not part of emitted tables
};

struct CoverageReport {
  std::vector<CoverageCell> cells;
  int failed_reps = 0;
  std::vector<std::string> failures;
  int floored_rates = 0;
};

std::vector<double> table_gammas();

// Coverage of [ci_lower, ci_upper] for the true ADE.  config.alpha is the
// total miss rate of the two-sided interval, so each one-sided limit is
// computed at alpha / 2.
CoverageReport coverage_experiment(const DgpSpec& spec, const CoverageOptions& options,
                                   const RunConfig& config);

// Concatenates reports cell-wise.
void append(CoverageReport& into, const CoverageReport& from);

struct Table {
  std::string text;
  std::string csv;
};

// Rows (dose, outcome, delta) by gamma columns; CSV in long format with
// columns dose,outcome,delta,gamma,coverage,reps,mean_width.
Table emit_table(const CoverageReport& report);

}  // namespace adesens

#endif  // ADESENS_SIMULATION_HPP_
