#ifndef ADESENS_DATA_HPP_
#define ADESENS_DATA_HPP_

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "adesens/types.hpp"

namespace adesens {

// One observation (y, a, x).
struct ObservedSample {
  double y = 0.0;
  double a = 0.0;
  Eigen::RowVectorXd x;
};

// Column-oriented sample of n observations with d covariates.  Immutable
// after construction; the constructor enforces the invariants (n >= 1,
// finite values, y in {0, 1} for binary outcomes).
class Dataset {
 public:
  Dataset(Eigen::VectorXd y, Eigen::VectorXd a, CovariateMatrix x,
          OutcomeType outcome_type);

  Eigen::Index size() const { return y_.size(); }
  Eigen::Index dim() const { return x_.cols(); }
  OutcomeType outcome_type() const { return outcome_type_; }

  const Eigen::VectorXd& y() const { return y_; }
  const Eigen::VectorXd& a() const { return a_; }
  const CovariateMatrix& x() const { return x_; }

  ObservedSample sample(Eigen::Index i) const;

  // Rows selected by index, in the given order.
  Dataset subset(const std::vector<Eigen::Index>& rows) const;

 private:
  Eigen::VectorXd y_;
  Eigen::VectorXd a_;
  CovariateMatrix x_;
  OutcomeType outcome_type_;
};

// CSV with a header naming the columns y, a, x1..xd in any order.
Dataset load_csv(const std::filesystem::path& path, OutcomeType outcome_type);
Dataset parse_csv(std::istream& in, OutcomeType outcome_type);
void write_csv(std::ostream& out, const Dataset& data);

// Evenly spaced sensitivity parameters gamma_lo..gamma_hi, endpoints included.
class GammaGrid {
 public:
  GammaGrid(double gamma_lo, double gamma_hi, int n_points);

  double lo() const { return lo_; }
  double hi() const { return hi_; }
  int size() const { return n_points_; }
  double operator[](int i) const;
  std::vector<double> points() const;

 private:
  double lo_;
  double hi_;
  int n_points_;
};

// Fold id in 0..K-1 for each of n samples.  Fold sizes differ by at most
// one and the assignment depends only on (n, K, seed).
std::vector<int> make_folds(Eigen::Index n, int folds, std::uint64_t seed);

struct LearnerSettings {
  int degree_a = 3;
  int degree_x = 2;
  int interaction_order = 1;
  double ridge = 1e-6;
  // Absolute Gaussian resmoothing bandwidth; unset means 0.2 * sd(A) of the
  // training fold.
  std::optional<double> resmooth_bandwidth;
  double variance_floor = 1e-3;
  int median_iterations = 2000;
  double median_step = 1.0;
};

struct RunConfig {
  OutcomeType outcome_type = OutcomeType::kContinuous;
  int folds = 5;
  double lse_t = 50.0;
  double alpha = 0.05;
  std::uint64_t seed = 20240601;
  double score_truncation = 50.0;
  LearnerSettings learner;

  // Throws ConfigError when an invariant is violated.
  void validate() const;
};

// Keys of a flat key=value config file that belong to the simulation
// harness rather than to a single analysis.
struct SimulationKeys {
  std::optional<std::string> dose;
  std::optional<double> delta;
  std::optional<double> zeta;
  std::optional<double> eta;
  std::optional<int> n;
  std::optional<int> reps;
};

enum class ConfigScope { kAnalysis, kSimulation };

struct ConfigFile {
  RunConfig run;
  SimulationKeys simulation;
};

// Parses "key = value" lines ('#' starts a comment).  Unknown keys are
// errors, and simulation keys are rejected when scope is kAnalysis.
ConfigFile parse_config(std::istream& in, ConfigScope scope,
                        RunConfig defaults = {});
ConfigFile load_config(const std::filesystem::path& path, ConfigScope scope,
                       RunConfig defaults = {});

}  // namespace adesens

#endif  // ADESENS_DATA_HPP_
