#include "adesens/inference.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "adesens/normal.hpp"

namespace adesens {

Contribution weighted_base_and_correction(const ObservedSample& sample,
                                          const NuisanceFit& fit, const WeightFn& weight,
                                          double lse_t) {
  const double w = weight.w(sample.a, sample.x);
  if (!(w >= 0.0)) throw DomainError("weight function returned a negative value");
  const double w_prime = weight.w_prime(sample.a, sample.x);
  const double s = fit.predict_score(sample.a, sample.x);
  Contribution c;
  c.base = -w_prime * sample.y - w * s * sample.y;
  if (fit.outcome_type() == OutcomeType::kBinary) {
    c.correction = w * lse_h(fit.predict_mu(sample.a, sample.x), lse_t);
  } else {
    c.correction = w * correction_continuous(sample.y, fit.predict_median(sample.a, sample.x));
  }
  return c;
}

EifDecomposition eif_terms(const Dataset& data, const std::vector<NuisanceFit>& fits,
                           const std::vector<int>& folds, double lse_t,
                           const WeightFn* weights) {
  const Eigen::Index n = data.size();
  if (static_cast<Eigen::Index>(folds.size()) != n) {
    throw InternalError("fold assignment has " + std::to_string(folds.size()) +
                        " entries for " + std::to_string(n) + " samples");
  }
  const int k_folds = static_cast<int>(fits.size());
  std::vector<std::vector<Eigen::Index>> members(k_folds);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (folds[i] < 0 || folds[i] >= k_folds) {
      throw InternalError("sample " + std::to_string(i) + " is in fold " +
                          std::to_string(folds[i]) + " which has no fitted model");
    }
    members[folds[i]].push_back(i);
  }

  EifDecomposition eif{Eigen::VectorXd(n), Eigen::VectorXd(n)};
  for (int k = 0; k < k_folds; ++k) {
    if (members[k].empty()) continue;
    const NuisanceFit& fit = fits[k];
    if (fit.outcome_type() != data.outcome_type()) {
      throw InternalError("nuisance fit outcome type does not match the dataset");
    }
    const Dataset part = data.subset(members[k]);
    const Eigen::VectorXd& y = part.y();
    const Eigen::VectorXd mu = fit.mu(part.a(), part.x());
    const Eigen::VectorXd mu_prime = fit.mu_prime(part.a(), part.x());
    const Eigen::VectorXd score = fit.score(part.a(), part.x());
    const Eigen::ArrayXd resid = (y - mu).array();

    Eigen::ArrayXd corr;
    if (data.outcome_type() == OutcomeType::kBinary) {
      corr = lse_h(mu.array(), lse_t) + lse_h_prime(mu.array(), lse_t) * resid;
    } else {
      const Eigen::ArrayXd dev = (y - fit.median(part.a(), part.x())).array();
      corr = dev.abs();
    }

    Eigen::ArrayXd w = Eigen::ArrayXd::Ones(part.size());
    Eigen::ArrayXd w_prime = Eigen::ArrayXd::Zero(part.size());
    if (weights) {
      for (Eigen::Index i = 0; i < part.size(); ++i) {
        w[i] = weights->w(part.a()[i], part.x().row(i));
        if (!(w[i] >= 0.0)) throw DomainError("weight function returned a negative value");
        w_prime[i] = weights->w_prime(part.a()[i], part.x().row(i));
      }
    }
    const Eigen::ArrayXd base =
        w * mu_prime.array() - w_prime * resid - w * score.array() * resid;
    corr = w * corr;

    for (std::size_t j = 0; j < members[k].size(); ++j) {
      eif.base_if[members[k][j]] = base[j];
      eif.corr_if[members[k][j]] = corr[j];
    }
  }
  return eif;
}

namespace {

double lse_shift(OutcomeType type, double lse_t) {
  return type == OutcomeType::kBinary ? std::numbers::ln2 / lse_t : 0.0;
}

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
}

struct Moments {
  double a = 0.0;
  double b = 0.0;
  double vaa = 0.0;
  double vbb = 0.0;
  double cab = 0.0;
};

Moments moments(const EifDecomposition& eif) {
  const Eigen::Index n = eif.base_if.size();
  if (n < 2 || eif.corr_if.size() != n) {
    throw DomainError("variance needs at least two samples");
  }
  Moments m;
  m.a = eif.base_if.mean();
  m.b = eif.corr_if.mean();
  const Eigen::ArrayXd da = eif.base_if.array() - m.a;
  const Eigen::ArrayXd db = eif.corr_if.array() - m.b;
  m.vaa = da.square().mean();
  m.vbb = db.square().mean();
  m.cab = (da * db).mean();
  return m;
}

// Smallest gamma >= 0 with c - gamma b <= z sqrt((vaa + 2 s gamma + gamma^2 vbb) / n)
// for b > 0.  The left side is affine and the right side convex, so the
// difference is concave with a single root beyond zero.
double wald_crossing(double c, double b, double z, double vaa, double s, double vbb,
                     double n) {
  auto sd = [&](double g) {
    return std::sqrt(std::max(0.0, (vaa + 2.0 * s * g + g * g * vbb) / n));
  };
  auto gap = [&](double g) { return c - g * b - z * sd(g); };
  if (gap(0.0) <= 0.0) return 0.0;
  const double hi = c / b;
  const double qa = b * b - z * z * vbb / n;
  const double qb = -2.0 * c * b - 2.0 * z * z * s / n;
  const double qc = c * c - z * z * vaa / n;
  double best = hi;
  bool found = false;
  auto consider = [&](double g) {
    if (std::isfinite(g) && g >= 0.0 && g <= hi && g < best &&
        std::abs(gap(g)) <= 1e-9 * std::max(1.0, std::abs(c))) {
      best = g;
      found = true;
    }
  };
  if (std::abs(qa) <= 1e-14 * std::max(b * b, 1e-300)) {
    if (qb != 0.0) consider(-qc / qb);
  } else {
    const double disc = qb * qb - 4.0 * qa * qc;
    if (disc >= 0.0) {
      const double q = -0.5 * (qb + std::copysign(std::sqrt(disc), qb));
      if (q != 0.0) consider(qc / q);
      consider(q / qa);
    }
  }
  if (found) return best;
  // Round-off rejected both roots; fall back to bisection on the bracket.
  double lo = 0.0;
  double up = hi;
  for (int i = 0; i < 200 && up - lo > 1e-15 * hi; ++i) {
    const double mid = 0.5 * (lo + up);
    (gap(mid) > 0.0 ? lo : up) = mid;
  }
  return up;
}

}  // namespace

BoundEstimate estimate_bounds(const EifDecomposition& eif, double gamma, double alpha,
                              OutcomeType outcome_type, double lse_t) {
  if (!(gamma >= 0.0)) throw DomainError("sensitivity parameter gamma must be >= 0");
  check_alpha(alpha);
  const Moments m = moments(eif);
  const double n = static_cast<double>(eif.base_if.size());
  const double z = normal_quantile(1.0 - alpha);

  BoundEstimate est;
  est.gamma = gamma;
  est.psi_max_hat = m.a + gamma * m.b;
  est.psi_min_hat = m.a - gamma * m.b;
  est.var_max = m.vaa + 2.0 * gamma * m.cab + gamma * gamma * m.vbb;
  est.var_min = m.vaa - 2.0 * gamma * m.cab + gamma * gamma * m.vbb;
  est.lse_correction_applied = lse_shift(outcome_type, lse_t);
  est.ci_upper =
      est.psi_max_hat + z * std::sqrt(std::max(0.0, est.var_max) / n) + est.lse_correction_applied;
  est.ci_lower =
      est.psi_min_hat - z * std::sqrt(std::max(0.0, est.var_min) / n) - est.lse_correction_applied;
  return est;
}

double SensitivityCurve::simultaneous_lower(double gamma) const {
  return a_lower - gamma * b_upper - lse_shift(outcome_type, lse_t);
}

double SensitivityCurve::simultaneous_upper(double gamma) const {
  return a_upper + gamma * b_upper + lse_shift(outcome_type, lse_t);
}

SensitivityCurve sensitivity_curve(const EifDecomposition& eif,
                                   const std::vector<double>& gammas, double alpha,
                                   OutcomeType outcome_type, double lse_t,
                                   double reference) {
  check_alpha(alpha);
  if (!(lse_t > 0.0)) throw DomainError("lse_t must be > 0");
  const Moments m = moments(eif);
  const double n = static_cast<double>(eif.base_if.size());

  SensitivityCurve curve;
  curve.alpha = alpha;
  curve.lse_t = lse_t;
  curve.reference = reference;
  curve.outcome_type = outcome_type;
  curve.n = eif.base_if.size();
  curve.a_hat = m.a;
  curve.b_hat = m.b;
  curve.se_a = std::sqrt(m.vaa / n);
  curve.se_b = std::sqrt(m.vbb / n);
  curve.cov_ab = m.cab;

  const double z_a = normal_quantile(1.0 - alpha / 4.0);
  const double z_b = normal_quantile(1.0 - alpha / 2.0);
  curve.a_lower = m.a - z_a * curve.se_a;
  curve.a_upper = m.a + z_a * curve.se_a;
  curve.b_upper = m.b + z_b * curve.se_b;

  for (double g : gammas) {
    curve.estimates.push_back(estimate_bounds(eif, g, alpha, outcome_type, lse_t));
    curve.sim_lower.push_back(curve.simultaneous_lower(g));
    curve.sim_upper.push_back(curve.simultaneous_upper(g));
  }

  if (m.b > 0.0) {
    const double shift = lse_shift(outcome_type, lse_t);
    const double z = normal_quantile(1.0 - alpha);
    Crossings& cr = curve.crossings;
    if (m.a >= reference) {
      cr.point = (m.a - reference) / m.b;
      cr.pointwise = wald_crossing(m.a - shift - reference, m.b, z, m.vaa, -m.cab, m.vbb, n);
      const double c = curve.a_lower - shift - reference;
      if (c <= 0.0) {
        cr.simultaneous = 0.0;
      } else if (curve.b_upper > 0.0) {
        cr.simultaneous = c / curve.b_upper;
      }
    } else {
      cr.point = (reference - m.a) / m.b;
      cr.pointwise = wald_crossing(reference - m.a - shift, m.b, z, m.vaa, m.cab, m.vbb, n);
      const double c = reference - curve.a_upper - shift;
      if (c <= 0.0) {
        cr.simultaneous = 0.0;
      } else if (curve.b_upper > 0.0) {
        cr.simultaneous = c / curve.b_upper;
      }
    }
  }
  return curve;
}

SensitivityCurve sensitivity_curve(const EifDecomposition& eif, const GammaGrid& grid,
                                   double alpha, OutcomeType outcome_type, double lse_t,
                                   double reference) {
  return sensitivity_curve(eif, grid.points(), alpha, outcome_type, lse_t, reference);
}

EifDecomposition cross_fit_eif(const Dataset& data, const RunConfig& config,
                               const WeightFn* weights) {
  config.validate();
  if (data.outcome_type() != config.outcome_type) {
    throw ConfigError("dataset outcome type does not match the run configuration");
  }
  const std::vector<int> folds = make_folds(data.size(), config.folds, config.seed);
  std::vector<NuisanceFit> fits;
  fits.reserve(config.folds);
  for (int k = 0; k < config.folds; ++k) {
    std::vector<Eigen::Index> train;
    for (Eigen::Index i = 0; i < data.size(); ++i) {
      if (folds[i] != k) train.push_back(i);
    }
    fits.push_back(fit_all(data.subset(train), config));
  }
  return eif_terms(data, fits, folds, config.lse_t, weights);
}

SensitivityCurve analyze(const Dataset& data, const RunConfig& config,
                         const GammaGrid& grid, const WeightFn* weights, double reference) {
  const EifDecomposition eif = cross_fit_eif(data, config, weights);
  return sensitivity_curve(eif, grid, config.alpha, config.outcome_type, config.lse_t,
                           reference);
}

}  // namespace adesens
