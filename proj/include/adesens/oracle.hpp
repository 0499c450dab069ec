#ifndef ADESENS_ORACLE_HPP_
#define ADESENS_ORACLE_HPP_

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "adesens/simulation.hpp"

namespace adesens {

// Discrete conditional law of Y in one (a, x) stratum together with the
// observed score s0 and the sensitivity parameter.
struct StratumInstance {
  Eigen::VectorXd y_values;
  Eigen::VectorXd probs;
  double s0 = 0.0;
  double gamma = 0.0;

  // Throws DomainError unless probs are nonnegative and sum to one within
  // 1e-12, sizes agree, values are finite and gamma >= 0.
  void validate() const;
};

enum class Direction { kMax, kMin };

struct StratumSolution {
  Eigen::VectorXd s_star;  // in input order
  double objective = 0.0;
  double split_point = 0.0;
  double fractional_mass = 0.0;  // share of the split atom on the low side
};

// Exact solution of max/min sum_i p_i (-s_i) y_i subject to
// s_i in [s0 - gamma, s0 + gamma] and sum_i p_i s_i = s0.  The optimum puts
// s0 - gamma on the upper half of the probability mass (for max) and
// s0 + gamma on the lower half, splitting the median atom.
StratumSolution solve_stratum(const StratumInstance& instance, Direction direction);

// Closed forms of the stratum optimum.
double closed_form_binary(double p, double s0, double gamma, Direction direction);
// Atoms on a uniform grid, each spread over the cell of width `spacing`
// centred on it; the closed form is evaluated on that continuous law.
double closed_form_gridded(const StratumInstance& instance, double spacing,
                           Direction direction);

struct VerificationLine {
  int instance_id = 0;
  std::string kind;  // "binary" or "continuous"
  double lp_value = 0.0;
  double closed_form = 0.0;
  double gap = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct VerificationReport {
  std::vector<VerificationLine> lines;
  bool all_pass() const;
};

// Random binary and gridded continuous instances (200-500 atoms) compared
// against the closed forms in both directions.
VerificationReport verify_propositions(int n_binary, int n_continuous, std::uint64_t seed);

// f(a | x, u) = zeta(x, u) eta(a, x) exp(gamma_r a u) on a finite u grid.
struct RosenbaumModel {
  std::function<double(double a, double x)> eta;
  double gamma_r = 0.0;
  std::vector<double> u_values;
  std::vector<double> u_probs;  // p(u | x)
  double a_lo = -12.0;
  double a_hi = 12.0;
  int quadrature_points = 2001;
  // Multiplies every normalizer; 1 is the correct model.
  double normalizer_scale = 1.0;

  static RosenbaumModel standard_normal(double gamma_r);
};

struct ModelCheck {
  std::string check;
  double max_violation = 0.0;  // largest excess over the allowed bound
  double tolerance = 0.0;
  bool pass = false;
  double worst_a = 0.0;
  double worst_a_prime = 0.0;
  double worst_u = 0.0;
};

struct ModelReport {
  std::vector<ModelCheck> checks;
  bool all_pass() const;
};

// Checks normalization, the odds-ratio bound of the marginal model, the
// score-gap bound and the score identity E[s(a|x,U) | a, x] = s(a|x).
ModelReport verify_model_implication(const RosenbaumModel& model,
                                     const std::vector<double>& a_grid, double x_fixed);

struct MonteCarloMean {
  double mean = 0.0;
  double se = 0.0;
};

// E over (A, X, U) of d/da E[Y | A, X, U] under the drawn coefficients.
MonteCarloMean monte_carlo_ade(const DgpSpec& spec, const DgpCoefficients& coefficients,
                               long n_mc, std::uint64_t seed);
// Exact for continuous outcomes (eta + eta_ax' E[X]); Monte Carlo for binary.
double ground_truth_ade(const DgpSpec& spec, const DgpCoefficients& coefficients,
                        long n_mc, std::uint64_t seed);

struct IdentityCheck {
  double analytic = 0.0;
  double monte_carlo = 0.0;
  double se = 0.0;
  bool pass = false;
};

// E[d/da E[Y|A,X,U]] against E[-s(A|X,U) Y] for a Gaussian exposure and
// continuous outcome; pass when within 4 standard errors.
IdentityCheck check_score_identity(const DgpSpec& spec, const DgpCoefficients& coefficients,
                                   long n_mc, std::uint64_t seed);

}  // namespace adesens

#endif  // ADESENS_ORACLE_HPP_
