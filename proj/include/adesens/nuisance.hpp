#ifndef ADESENS_NUISANCE_HPP_
#define ADESENS_NUISANCE_HPP_

#include <Eigen/Core>

#include <functional>
#include <optional>
#include <vector>

#include "adesens/data.hpp"
#include "adesens/types.hpp"

namespace adesens {

// Batch predictor: one output per row of (a, x).
using Predictor =
    std::function<Eigen::VectorXd(const Eigen::VectorXd& a, const CovariateMatrix& x)>;

struct BasisSpec {
  int degree_a = 3;
  int degree_x = 2;
  int interaction_order = 1;
  double ridge = 1e-6;

  static BasisSpec from(const LearnerSettings& s) {
    return {s.degree_a, s.degree_x, s.interaction_order, s.ridge};
  }
};

// Features 1, a^k (k <= degree_a), x_j^k (k <= degree_x) and
// a^k * x_j (k <= min(interaction_order, degree_a)).
class TensorBasis {
 public:
  TensorBasis(const BasisSpec& spec, Eigen::Index dim);

  Eigen::Index size() const;
  Eigen::MatrixXd expand(const Eigen::VectorXd& a, const CovariateMatrix& x) const;

 private:
  BasisSpec spec_;
  Eigen::Index dim_;
};

// Linear model on a standardized TensorBasis, optionally through the logistic
// link.  Columns are standardized with training moments; columns that are
// constant on the training data are dropped.
class BasisModel {
 public:
  enum class Link { kIdentity, kLogistic };

  BasisModel(TensorBasis basis, Eigen::RowVectorXd center, Eigen::RowVectorXd scale,
             Eigen::VectorXd coef, Link link);

  Eigen::VectorXd predict(const Eigen::VectorXd& a, const CovariateMatrix& x) const;
  Eigen::VectorXd linear_predictor(const Eigen::VectorXd& a,
                                   const CovariateMatrix& x) const;

  // Standardized design for (a, x).
  Eigen::MatrixXd design(const Eigen::VectorXd& a, const CovariateMatrix& x) const;

  const Eigen::VectorXd& coefficients() const { return coef_; }
  BasisModel with_coefficients(Eigen::VectorXd coef) const;

 private:
  TensorBasis basis_;
  Eigen::RowVectorXd center_;
  Eigen::RowVectorXd scale_;  // 0 marks a dropped column
  Eigen::VectorXd coef_;
  Link link_;
};

// Ridge least squares (continuous y) or ridge logistic regression (binary y)
// on the tensor basis.  Binary predictions are clipped to [1e-6, 1 - 1e-6].
BasisModel fit_conditional_mean(const Dataset& train, const BasisSpec& spec);

// Regression of the response on x only; used for the location-scale score.
BasisModel fit_covariate_regression(const Eigen::VectorXd& response,
                                    const CovariateMatrix& x, const BasisSpec& spec);

// a -> d/da of the Gaussian-smoothed predictor, via a 21-node Gauss-Hermite
// rule: sum_q w_q mu(a + sigma z_q, x) z_q / sigma.
Predictor resmooth_derivative(Predictor mu, double bandwidth);

// Gaussian location-scale model for A | X.
class LocationScaleScore {
 public:
  LocationScaleScore(BasisModel location, BasisModel variance, double variance_floor,
                     double truncation);

  Eigen::VectorXd location(const CovariateMatrix& x) const;
  Eigen::VectorXd variance(const CovariateMatrix& x) const;
  // -(a - m(x)) / sigma^2(x), clamped to [-truncation, truncation].
  Eigen::VectorXd score(const Eigen::VectorXd& a, const CovariateMatrix& x) const;
  // Implied conditional density N(m(x), sigma^2(x)) at a.
  Eigen::VectorXd density(const Eigen::VectorXd& a, const CovariateMatrix& x) const;

 private:
  BasisModel location_;
  BasisModel variance_;
  double floor_;
  double truncation_;
};

LocationScaleScore fit_score_location_scale(const Dataset& train, const BasisSpec& spec,
                                            double variance_floor, double truncation);

struct MedianSchedule {
  int iterations = 2000;
  double step = 1.0;
};

// Least absolute deviations on the tensor basis by preconditioned subgradient
// descent started from the least-squares fit.  The iterate with the lowest
// training loss is returned.
BasisModel fit_conditional_median(const Dataset& train, const BasisSpec& spec,
                                  const MedianSchedule& schedule = {});

// Mean absolute residual of a model on a dataset.
double pinball_loss(const BasisModel& model, const Dataset& data);

// Fitted nuisance functions for one fold.  Built by fit_all or directly from
// closed-form predictors.
class NuisanceFit {
 public:
  NuisanceFit(OutcomeType outcome_type, Predictor mu, Predictor mu_prime,
              Predictor score, std::optional<Predictor> median = std::nullopt);

  OutcomeType outcome_type() const { return outcome_type_; }
  bool has_median() const { return median_.has_value(); }

  Eigen::VectorXd mu(const Eigen::VectorXd& a, const CovariateMatrix& x) const;
  Eigen::VectorXd mu_prime(const Eigen::VectorXd& a, const CovariateMatrix& x) const;
  Eigen::VectorXd score(const Eigen::VectorXd& a, const CovariateMatrix& x) const;
  // Throws UnsupportedOperation for binary fits.
  Eigen::VectorXd median(const Eigen::VectorXd& a, const CovariateMatrix& x) const;

  double predict_mu(double a, CovariateRow x) const;
  double predict_mu_prime(double a, CovariateRow x) const;
  double predict_score(double a, CovariateRow x) const;
  double predict_median(double a, CovariateRow x) const;

 private:
  OutcomeType outcome_type_;
  Predictor mu_;
  Predictor mu_prime_;
  Predictor score_;
  std::optional<Predictor> median_;
};

NuisanceFit fit_all(const Dataset& train, const RunConfig& config);

}  // namespace adesens

#endif  // ADESENS_NUISANCE_HPP_
