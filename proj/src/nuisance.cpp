#include "adesens/nuisance.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <utility>

#include "adesens/normal.hpp"
#include "adesens/quadrature.hpp"

namespace adesens {

namespace {

constexpr double kProbClip = 1e-6;
constexpr int kResmoothNodes = 21;

double sample_sd(const Eigen::VectorXd& v) {
  if (v.size() < 2) return 0.0;
  const double mean = v.mean();
  return std::sqrt((v.array() - mean).square().sum() / (v.size() - 1));
}

Eigen::VectorXd logistic(const Eigen::VectorXd& eta) {
  return eta.unaryExpr([](double e) {
    const double p = e >= 0.0 ? 1.0 / (1.0 + std::exp(-e)) : std::exp(e) / (1.0 + std::exp(e));
    return std::clamp(p, kProbClip, 1.0 - kProbClip);
  });
}

struct Standardized {
  Eigen::RowVectorXd center;
  Eigen::RowVectorXd scale;
};

// Column 0 is the intercept and is left alone.
Standardized standardize(const Eigen::MatrixXd& raw) {
  const Eigen::Index p = raw.cols();
  const double n = static_cast<double>(raw.rows());
  Standardized s{Eigen::RowVectorXd::Zero(p), Eigen::RowVectorXd::Zero(p)};
  s.scale[0] = 1.0;
  for (Eigen::Index j = 1; j < p; ++j) {
    const double mean = raw.col(j).mean();
    const double sd = std::sqrt((raw.col(j).array() - mean).square().sum() / n);
    s.center[j] = mean;
    s.scale[j] = sd > 1e-12 * std::max(1.0, std::abs(mean)) ? sd : 0.0;
  }
  return s;
}

Eigen::MatrixXd apply_standardization(const Eigen::MatrixXd& raw,
                                      const Eigen::RowVectorXd& center,
                                      const Eigen::RowVectorXd& scale) {
  Eigen::MatrixXd z(raw.rows(), raw.cols());
  for (Eigen::Index j = 0; j < raw.cols(); ++j) {
    if (scale[j] == 0.0) {
      z.col(j).setZero();
    } else {
      z.col(j) = (raw.col(j).array() - center[j]) / scale[j];
    }
  }
  return z;
}

Eigen::VectorXd penalty_mask(const Eigen::RowVectorXd& scale) {
  Eigen::VectorXd mask = Eigen::VectorXd::Ones(scale.size());
  mask[0] = 0.0;
  return mask;
}

// Dropped columns are zero in the design; pinning them with a unit diagonal
// keeps the normal equations nonsingular and their coefficients at zero.
void pin_dropped(Eigen::MatrixXd& gram, const Eigen::RowVectorXd& scale) {
  for (Eigen::Index j = 0; j < scale.size(); ++j) {
    if (scale[j] == 0.0) gram(j, j) = 1.0;
  }
}

void check_rank(const Eigen::MatrixXd& z, const Eigen::RowVectorXd& scale) {
  Eigen::Index active = 0;
  for (Eigen::Index j = 0; j < scale.size(); ++j) active += scale[j] != 0.0;
  Eigen::MatrixXd kept(z.rows(), active);
  for (Eigen::Index j = 0, k = 0; j < scale.size(); ++j) {
    if (scale[j] != 0.0) kept.col(k++) = z.col(j);
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(kept);
  if (qr.rank() < active) {
    throw NumericalError(
        "singular normal equations (collinear basis features); use ridge > 0");
  }
}

Eigen::VectorXd solve_ridge(const Eigen::MatrixXd& z, const Eigen::VectorXd& y,
                            const Eigen::RowVectorXd& scale, double ridge) {
  const double n = static_cast<double>(z.rows());
  if (ridge == 0.0) check_rank(z, scale);
  Eigen::MatrixXd gram = z.transpose() * z;
  gram.diagonal() += ridge * n * penalty_mask(scale);
  pin_dropped(gram, scale);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  Eigen::VectorXd coef = ldlt.solve(z.transpose() * y);
  if (ldlt.info() != Eigen::Success || !coef.allFinite()) {
    throw NumericalError("singular normal equations; use ridge > 0");
  }
  return coef;
}

Eigen::VectorXd solve_logistic(const Eigen::MatrixXd& z, const Eigen::VectorXd& y,
                               const Eigen::RowVectorXd& scale, double ridge) {
  const double n = static_cast<double>(z.rows());
  if (ridge == 0.0) check_rank(z, scale);
  const Eigen::VectorXd mask = penalty_mask(scale);
  Eigen::VectorXd coef = Eigen::VectorXd::Zero(z.cols());
  const double ybar = std::clamp(y.mean(), 0.01, 0.99);
  coef[0] = std::log(ybar / (1.0 - ybar));
  for (int iter = 0; iter < 100; ++iter) {
    const Eigen::VectorXd p = logistic(z * coef);
    const Eigen::VectorXd w = (p.array() * (1.0 - p.array())).max(1e-10).matrix();
    Eigen::MatrixXd hess = z.transpose() * w.asDiagonal() * z;
    hess.diagonal() += ridge * n * mask;
    pin_dropped(hess, scale);
    const Eigen::VectorXd grad =
        z.transpose() * (y - p) - ridge * n * mask.cwiseProduct(coef);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
    const Eigen::VectorXd step = ldlt.solve(grad);
    if (ldlt.info() != Eigen::Success || !step.allFinite()) {
      throw NumericalError("logistic fit: singular Hessian; use ridge > 0");
    }
    coef += step;
    if (step.lpNorm<Eigen::Infinity>() < 1e-10) break;
  }
  return coef;
}

void require_enough_rows(Eigen::Index n, Eigen::Index p) {
  if (p >= n) {
    throw DomainError("basis has " + std::to_string(p) + " features but only " +
                      std::to_string(n) + " training samples");
  }
}

}  // namespace

// ------------------------------------------------------------ TensorBasis

TensorBasis::TensorBasis(const BasisSpec& spec, Eigen::Index dim)
    : spec_(spec), dim_(dim) {
  if (spec.degree_a < 0 || spec.degree_x < 0 || spec.interaction_order < 0) {
    throw ConfigError("basis degrees must be >= 0");
  }
  if (!(spec.ridge >= 0.0)) throw ConfigError("ridge must be >= 0");
}

Eigen::Index TensorBasis::size() const {
  const int inter = std::min(spec_.interaction_order, spec_.degree_a);
  return 1 + spec_.degree_a + dim_ * (spec_.degree_x + inter);
}

Eigen::MatrixXd TensorBasis::expand(const Eigen::VectorXd& a,
                                    const CovariateMatrix& x) const {
  const Eigen::Index n = a.size();
  const int inter = std::min(spec_.interaction_order, spec_.degree_a);
  Eigen::MatrixXd out(n, size());
  Eigen::Index col = 0;
  out.col(col++).setOnes();
  for (int k = 1; k <= spec_.degree_a; ++k) out.col(col++) = a.array().pow(k);
  for (Eigen::Index j = 0; j < dim_; ++j) {
    for (int k = 1; k <= spec_.degree_x; ++k) out.col(col++) = x.col(j).array().pow(k);
    for (int k = 1; k <= inter; ++k) {
      out.col(col++) = a.array().pow(k) * x.col(j).array();
    }
  }
  return out;
}

// ------------------------------------------------------------- BasisModel

BasisModel::BasisModel(TensorBasis basis, Eigen::RowVectorXd center,
                       Eigen::RowVectorXd scale, Eigen::VectorXd coef, Link link)
    : basis_(std::move(basis)), center_(std::move(center)), scale_(std::move(scale)),
      coef_(std::move(coef)), link_(link) {}

Eigen::MatrixXd BasisModel::design(const Eigen::VectorXd& a,
                                   const CovariateMatrix& x) const {
  return apply_standardization(basis_.expand(a, x), center_, scale_);
}

Eigen::VectorXd BasisModel::linear_predictor(const Eigen::VectorXd& a,
                                             const CovariateMatrix& x) const {
  return design(a, x) * coef_;
}

Eigen::VectorXd BasisModel::predict(const Eigen::VectorXd& a,
                                    const CovariateMatrix& x) const {
  Eigen::VectorXd eta = linear_predictor(a, x);
  return link_ == Link::kLogistic ? logistic(eta) : eta;
}

BasisModel BasisModel::with_coefficients(Eigen::VectorXd coef) const {
  return BasisModel(basis_, center_, scale_, std::move(coef), link_);
}

// ----------------------------------------------------------------- fits

BasisModel fit_conditional_mean(const Dataset& train, const BasisSpec& spec) {
  TensorBasis basis(spec, train.dim());
  require_enough_rows(train.size(), basis.size());
  const Eigen::MatrixXd raw = basis.expand(train.a(), train.x());
  auto [center, scale] = standardize(raw);
  const Eigen::MatrixXd z = apply_standardization(raw, center, scale);
  if (train.outcome_type() == OutcomeType::kBinary) {
    Eigen::VectorXd coef = solve_logistic(z, train.y(), scale, spec.ridge);
    return BasisModel(basis, center, scale, std::move(coef), BasisModel::Link::kLogistic);
  }
  Eigen::VectorXd coef = solve_ridge(z, train.y(), scale, spec.ridge);
  return BasisModel(basis, center, scale, std::move(coef), BasisModel::Link::kIdentity);
}

BasisModel fit_covariate_regression(const Eigen::VectorXd& response,
                                    const CovariateMatrix& x, const BasisSpec& spec) {
  BasisSpec x_only = spec;
  x_only.degree_a = 0;
  x_only.interaction_order = 0;
  TensorBasis basis(x_only, x.cols());
  require_enough_rows(response.size(), basis.size());
  const Eigen::VectorXd dummy = Eigen::VectorXd::Zero(response.size());
  const Eigen::MatrixXd raw = basis.expand(dummy, x);
  auto [center, scale] = standardize(raw);
  const Eigen::MatrixXd z = apply_standardization(raw, center, scale);
  Eigen::VectorXd coef = solve_ridge(z, response, scale, spec.ridge);
  return BasisModel(basis, center, scale, std::move(coef), BasisModel::Link::kIdentity);
}

Predictor resmooth_derivative(Predictor mu, double bandwidth) {
  if (!(bandwidth > 0.0)) throw DomainError("resmoothing bandwidth must be > 0");
  static const GaussHermiteRule rule = gauss_hermite(kResmoothNodes);
  return [mu = std::move(mu), bandwidth](const Eigen::VectorXd& a,
                                         const CovariateMatrix& x) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(a.size());
    for (Eigen::Index q = 0; q < rule.nodes.size(); ++q) {
      const double z = rule.nodes[q];
      if (z == 0.0) continue;
      const Eigen::VectorXd shifted = (a.array() + bandwidth * z).matrix();
      out += (rule.weights[q] * z / bandwidth) * mu(shifted, x);
    }
    return out;
  };
}

// ------------------------------------------------------ location-scale

LocationScaleScore::LocationScaleScore(BasisModel location, BasisModel variance,
                                       double variance_floor, double truncation)
    : location_(std::move(location)), variance_(std::move(variance)),
      floor_(variance_floor), truncation_(truncation) {}

Eigen::VectorXd LocationScaleScore::location(const CovariateMatrix& x) const {
  return location_.predict(Eigen::VectorXd::Zero(x.rows()), x);
}

Eigen::VectorXd LocationScaleScore::variance(const CovariateMatrix& x) const {
  return variance_.predict(Eigen::VectorXd::Zero(x.rows()), x).cwiseMax(floor_);
}

Eigen::VectorXd LocationScaleScore::score(const Eigen::VectorXd& a,
                                          const CovariateMatrix& x) const {
  const Eigen::ArrayXd s = -(a - location(x)).array() / variance(x).array();
  return s.max(-truncation_).min(truncation_).matrix();
}

Eigen::VectorXd LocationScaleScore::density(const Eigen::VectorXd& a,
                                            const CovariateMatrix& x) const {
  const Eigen::ArrayXd sd = variance(x).array().sqrt();
  const Eigen::ArrayXd z = (a - location(x)).array() / sd;
  return (z.unaryExpr([](double v) { return normal_pdf(v); }) / sd).matrix();
}

LocationScaleScore fit_score_location_scale(const Dataset& train, const BasisSpec& spec,
                                            double variance_floor, double truncation) {
  if (!(variance_floor > 0.0)) throw ConfigError("variance_floor must be > 0");
  if (!(truncation > 0.0)) throw ConfigError("score_truncation must be > 0");
  const auto& a = train.a();
  if (a.maxCoeff() == a.minCoeff()) {
    throw DomainError("degenerate exposure: all exposures are identical");
  }
  BasisModel location = fit_covariate_regression(a, train.x(), spec);
  const Eigen::VectorXd resid =
      a - location.predict(Eigen::VectorXd::Zero(a.size()), train.x());
  BasisModel variance =
      fit_covariate_regression(resid.array().square().matrix(), train.x(), spec);
  return LocationScaleScore(std::move(location), std::move(variance), variance_floor,
                            truncation);
}

// ---------------------------------------------------------------- median

double pinball_loss(const BasisModel& model, const Dataset& data) {
  return (data.y() - model.predict(data.a(), data.x())).cwiseAbs().mean();
}

BasisModel fit_conditional_median(const Dataset& train, const BasisSpec& spec,
                                  const MedianSchedule& schedule) {
  if (train.outcome_type() == OutcomeType::kBinary) {
    throw UnsupportedOperation("conditional median is not defined for binary outcomes");
  }
  if (schedule.iterations < 1 || !(schedule.step > 0.0)) {
    throw ConfigError("median schedule needs iterations >= 1 and step > 0");
  }
  const BasisModel start = fit_conditional_mean(train, spec);
  const Eigen::MatrixXd z = start.design(train.a(), train.x());
  const Eigen::VectorXd& y = train.y();
  const double n = static_cast<double>(z.rows());

  Eigen::VectorXd coef = start.coefficients();
  Eigen::VectorXd resid = y - z * coef;
  const double resid_scale = resid.cwiseAbs().mean();
  if (resid_scale == 0.0) return start;

  // Precondition with the Gram matrix so steps are measured in fitted-value
  // units rather than coefficient units.
  Eigen::MatrixXd gram = z.transpose() * z / n;
  gram.diagonal().array() += 1e-10;
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    if (z.col(j).isZero(0.0) && j > 0) gram(j, j) = 1.0;
  }
  const Eigen::LDLT<Eigen::MatrixXd> precond(gram);

  Eigen::VectorXd best = coef;
  double best_loss = resid_scale;
  for (int k = 0; k < schedule.iterations; ++k) {
    const Eigen::VectorXd sign = resid.unaryExpr(
        [](double r) { return r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0); });
    const Eigen::VectorXd grad = -(z.transpose() * sign) / n;
    const Eigen::VectorXd dir = precond.solve(grad);
    const double norm = std::sqrt(std::max(0.0, dir.dot(gram * dir)));
    if (!(norm > 0.0)) break;
    const double eta = schedule.step * resid_scale / std::sqrt(k + 1.0);
    coef -= (eta / norm) * dir;
    resid = y - z * coef;
    const double loss = resid.cwiseAbs().mean();
    if (loss < best_loss) {
      best_loss = loss;
      best = coef;
    }
  }
  return start.with_coefficients(std::move(best));
}

// ----------------------------------------------------------- NuisanceFit

NuisanceFit::NuisanceFit(OutcomeType outcome_type, Predictor mu, Predictor mu_prime,
                         Predictor score, std::optional<Predictor> median)
    : outcome_type_(outcome_type), mu_(std::move(mu)), mu_prime_(std::move(mu_prime)),
      score_(std::move(score)), median_(std::move(median)) {
  if (!mu_ || !mu_prime_ || !score_ || (median_ && !*median_)) {
    throw InternalError("NuisanceFit: empty predictor");
  }
}

Eigen::VectorXd NuisanceFit::mu(const Eigen::VectorXd& a, const CovariateMatrix& x) const {
  return mu_(a, x);
}

Eigen::VectorXd NuisanceFit::mu_prime(const Eigen::VectorXd& a,
                                      const CovariateMatrix& x) const {
  return mu_prime_(a, x);
}

Eigen::VectorXd NuisanceFit::score(const Eigen::VectorXd& a,
                                   const CovariateMatrix& x) const {
  return score_(a, x);
}

Eigen::VectorXd NuisanceFit::median(const Eigen::VectorXd& a,
                                    const CovariateMatrix& x) const {
  if (!median_) {
    throw UnsupportedOperation(outcome_type_ == OutcomeType::kBinary
                                   ? "conditional median is not defined for binary outcomes"
                                   : "this fit has no median predictor");
  }
  return (*median_)(a, x);
}

namespace {

double scalar_call(const std::function<Eigen::VectorXd(const Eigen::VectorXd&,
                                                       const CovariateMatrix&)>& f,
                   double a, CovariateRow x) {
  Eigen::VectorXd av(1);
  av[0] = a;
  CovariateMatrix xm = x;
  return f(av, xm)[0];
}

}  // namespace

double NuisanceFit::predict_mu(double a, CovariateRow x) const {
  return scalar_call(mu_, a, x);
}

double NuisanceFit::predict_mu_prime(double a, CovariateRow x) const {
  return scalar_call(mu_prime_, a, x);
}

double NuisanceFit::predict_score(double a, CovariateRow x) const {
  return scalar_call(score_, a, x);
}

double NuisanceFit::predict_median(double a, CovariateRow x) const {
  return scalar_call([this](const Eigen::VectorXd& av,
                            const CovariateMatrix& xm) { return median(av, xm); },
                     a, x);
}

NuisanceFit fit_all(const Dataset& train, const RunConfig& config) {
  config.validate();
  if (train.outcome_type() != config.outcome_type) {
    throw ConfigError("dataset outcome type does not match the run configuration");
  }
  const LearnerSettings& learner = config.learner;
  const BasisSpec spec = BasisSpec::from(learner);

  auto score_model = std::make_shared<LocationScaleScore>(fit_score_location_scale(
      train, spec, learner.variance_floor, config.score_truncation));
  auto mean_model = std::make_shared<BasisModel>(fit_conditional_mean(train, spec));

  const double bandwidth =
      learner.resmooth_bandwidth ? *learner.resmooth_bandwidth : 0.2 * sample_sd(train.a());
  Predictor mu = [mean_model](const Eigen::VectorXd& a, const CovariateMatrix& x) {
    return mean_model->predict(a, x);
  };
  Predictor mu_prime = resmooth_derivative(mu, bandwidth);
  Predictor score = [score_model](const Eigen::VectorXd& a, const CovariateMatrix& x) {
    return score_model->score(a, x);
  };
  std::optional<Predictor> median;
  if (train.outcome_type() == OutcomeType::kContinuous) {
    auto median_model = std::make_shared<BasisModel>(fit_conditional_median(
        train, spec, {learner.median_iterations, learner.median_step}));
    median = [median_model](const Eigen::VectorXd& a, const CovariateMatrix& x) {
      return median_model->predict(a, x);
    };
  }
  return NuisanceFit(train.outcome_type(), std::move(mu), std::move(mu_prime),
                     std::move(score), std::move(median));
}

}  // namespace adesens
