#ifndef ADESENS_INFERENCE_HPP_
#define ADESENS_INFERENCE_HPP_

#include <Eigen/Core>

#include <optional>
#include <vector>

#include "adesens/bounds.hpp"
#include "adesens/data.hpp"
#include "adesens/nuisance.hpp"

namespace adesens {

// Per-sample uncentered influence values of a = E[-s(A|X) Y] and of the
// correction b, computed from out-of-fold nuisance predictions.
struct EifDecomposition {
  Eigen::VectorXd base_if;
  Eigen::VectorXd corr_if;
};

// fits[k] must have been trained without the samples whose folds[i] == k.
// With weights, base_if = w mu' + (-w' - w s)(y - mu) and corr_if is scaled
// by w; unit weights reproduce the unweighted terms exactly.
EifDecomposition eif_terms(const Dataset& data, const std::vector<NuisanceFit>& fits,
                           const std::vector<int>& folds, double lse_t,
                           const WeightFn* weights = nullptr);

struct BoundEstimate {
  double gamma = 0.0;
  double psi_min_hat = 0.0;
  double psi_max_hat = 0.0;
  double var_min = 0.0;
  double var_max = 0.0;
  double ci_lower = 0.0;
  double ci_upper = 0.0;
  double lse_correction_applied = 0.0;
};

// psi_max = mean(base + gamma corr), psi_min = mean(base - gamma corr) with
// one-sided level-(1 - alpha) Wald limits; binary outcomes widen each limit by
// ln(2) / t.
BoundEstimate estimate_bounds(const EifDecomposition& eif, double gamma, double alpha,
                              OutcomeType outcome_type, double lse_t);

struct Crossings {
  std::optional<double> point;
  std::optional<double> pointwise;
  std::optional<double> simultaneous;
};

struct SensitivityCurve {
  double alpha = 0.05;
  double lse_t = 50.0;
  double reference = 0.0;
  OutcomeType outcome_type = OutcomeType::kContinuous;
  Eigen::Index n = 0;

  std::vector<BoundEstimate> estimates;
  std::vector<double> sim_lower;
  std::vector<double> sim_upper;

  double a_hat = 0.0;
  double b_hat = 0.0;
  double se_a = 0.0;
  double se_b = 0.0;
  double cov_ab = 0.0;  // covariance of the per-sample terms, not of the means

  // Ingredients of the simultaneous band: two-sided (1 - alpha/2) interval
  // for a and one-sided (1 - alpha/2) upper limit for b.
  double a_lower = 0.0;
  double a_upper = 0.0;
  double b_upper = 0.0;

  Crossings crossings;

  double simultaneous_lower(double gamma) const;
  double simultaneous_upper(double gamma) const;
};

SensitivityCurve sensitivity_curve(const EifDecomposition& eif,
                                   const std::vector<double>& gammas, double alpha,
                                   OutcomeType outcome_type, double lse_t,
                                   double reference = 0.0);
SensitivityCurve sensitivity_curve(const EifDecomposition& eif, const GammaGrid& grid,
                                   double alpha, OutcomeType outcome_type, double lse_t,
                                   double reference = 0.0);

// Folds, per-fold nuisance fits and out-of-fold influence terms.
EifDecomposition cross_fit_eif(const Dataset& data, const RunConfig& config,
                               const WeightFn* weights = nullptr);

SensitivityCurve analyze(const Dataset& data, const RunConfig& config,
                         const GammaGrid& grid, const WeightFn* weights = nullptr,
                         double reference = 0.0);

}  // namespace adesens

#endif  // ADESENS_INFERENCE_HPP_
