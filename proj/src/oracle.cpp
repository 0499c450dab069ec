#include "adesens/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "adesens/normal.hpp"
#include "adesens/quadrature.hpp"

namespace adesens {

void StratumInstance::validate() const {
  if (y_values.size() == 0 || y_values.size() != probs.size()) {
    throw DomainError("stratum instance: y_values and probs must be nonempty and equal length");
  }
  if (!y_values.allFinite() || !probs.allFinite() || !std::isfinite(s0)) {
    throw DomainError("stratum instance: non-finite entry");
  }
  if ((probs.array() < 0.0).any()) throw DomainError("stratum instance: negative probability");
  if (std::abs(probs.sum() - 1.0) > 1e-12) {
    throw DomainError("stratum instance: probabilities must sum to 1");
  }
  if (!(gamma >= 0.0)) throw DomainError("stratum instance: gamma must be >= 0");
}

StratumSolution solve_stratum(const StratumInstance& instance, Direction direction) {
  instance.validate();
  const Eigen::Index n = instance.y_values.size();
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) {
    return instance.y_values[i] < instance.y_values[j];
  });

  // v = -1 on the upper half of the mass and +1 on the lower half gives the
  // maximum; the minimum flips the signs.
  Eigen::VectorXd v = Eigen::VectorXd::Ones(n);
  StratumSolution sol;
  double remaining = 0.5;
  bool split_found = false;
  for (Eigen::Index k = n - 1; k >= 0; --k) {
    const Eigen::Index i = order[k];
    const double p = instance.probs[i];
    if (remaining <= 0.0) break;
    if (p <= remaining) {
      v[i] = -1.0;
      remaining -= p;
      if (remaining <= 0.0) {
        sol.split_point = instance.y_values[i];
        sol.fractional_mass = 0.0;
        split_found = true;
      }
    } else {
      const double upper_share = remaining / p;
      v[i] = (1.0 - upper_share) - upper_share;
      sol.split_point = instance.y_values[i];
      sol.fractional_mass = 1.0 - upper_share;
      remaining = 0.0;
      split_found = true;
    }
  }
  if (!split_found) sol.split_point = instance.y_values[order.front()];
  if (direction == Direction::kMin) v = -v;

  sol.s_star = (instance.s0 + instance.gamma * v.array()).matrix();
  sol.objective =
      -(instance.probs.array() * sol.s_star.array() * instance.y_values.array()).sum();
  return sol;
}

double closed_form_binary(double p, double s0, double gamma, Direction direction) {
  const double sign = direction == Direction::kMax ? 1.0 : -1.0;
  return -s0 * p + sign * gamma * std::min(p, 1.0 - p);
}

double closed_form_gridded(const StratumInstance& instance, double spacing,
                           Direction direction) {
  instance.validate();
  if (!(spacing > 0.0)) throw DomainError("closed_form_gridded: spacing must be > 0");
  const auto& y = instance.y_values;
  const auto& p = instance.probs;
  const Eigen::Index n = y.size();
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) { return y[i] < y[j]; });

  // Median of the spread law: the cell where the cumulative mass passes 1/2.
  const double half_width = 0.5 * spacing;
  double below = 0.0;
  double median = y[order.back()];
  Eigen::Index m = order.back();
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index i = order[k];
    if (p[i] > 0.0 && below + p[i] >= 0.5) {
      median = y[i] - half_width + spacing * (0.5 - below) / p[i];
      m = i;
      break;
    }
    below += p[i];
  }
  double abs_dev = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (i == m) {
      const double u = median - y[i];
      abs_dev += p[i] * (half_width * half_width + u * u) / spacing;
    } else {
      abs_dev += p[i] * std::abs(y[i] - median);
    }
  }
  const double sign = direction == Direction::kMax ? 1.0 : -1.0;
  return -instance.s0 * p.dot(y) + sign * instance.gamma * abs_dev;
}

bool VerificationReport::all_pass() const {
  return std::all_of(lines.begin(), lines.end(), [](const auto& l) { return l.pass; });
}

namespace {

// Mass of the atom at which the cumulative distribution passes 1/2.
double median_atom_mass(const StratumInstance& inst) {
  double cum = 0.0;
  for (Eigen::Index i = 0; i < inst.probs.size(); ++i) {
    cum += inst.probs[i];
    if (cum >= 0.5) return inst.probs[i];
  }
  return inst.probs[inst.probs.size() - 1];
}

StratumInstance gridded_instance(CounterRng& rng, double& spacing) {
  std::uniform_int_distribution<int> atoms_dist(200, 500);
  std::uniform_int_distribution<int> family_dist(0, 3);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const int atoms = atoms_dist(rng);
  const int family = family_dist(rng);
  const double center = 2.0 * normal(rng);
  const double scale = 0.5 + 2.5 * unit(rng);
  const double shift = 1.0 + 2.0 * unit(rng);
  const double weight = 0.2 + 0.6 * unit(rng);
  spacing = 16.0 * scale / (atoms - 1);

  StratumInstance inst;
  inst.y_values.resize(atoms);
  inst.probs.resize(atoms);
  for (int i = 0; i < atoms; ++i) {
    const double z = -8.0 + 16.0 * i / (atoms - 1);
    inst.y_values[i] = center + scale * z;
    double dens = 0.0;
    switch (family) {
      case 0:  // normal
        dens = normal_pdf(z);
        break;
      case 1:  // two-component mixture
        dens = weight * normal_pdf(z + shift) + (1.0 - weight) * normal_pdf((z - shift) / 0.5);
        break;
      case 2:  // right-skewed
        dens = z > -7.5 ? std::exp(-(z + 7.5) / shift) * (z + 7.5) : 0.0;
        break;
      default:  // uniform on the central part
        dens = std::abs(z) <= 3.0 ? 1.0 : 0.0;
        break;
    }
    inst.probs[i] = dens;
  }
  inst.probs /= inst.probs.sum();
  inst.s0 = normal(rng);
  inst.gamma = 2.0 * unit(rng);
  return inst;
}

}  // namespace

VerificationReport verify_propositions(int n_binary, int n_continuous, std::uint64_t seed) {
  if (n_binary < 0 || n_continuous < 0) throw ConfigError("instance counts must be >= 0");
  VerificationReport report;
  const CounterRng root(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  for (int id = 0; id < n_binary; ++id) {
    CounterRng rng = root.split(static_cast<std::uint64_t>(id));
    const double p = id == 0 ? 0.5 : unit(rng);
    StratumInstance inst;
    inst.y_values = Eigen::Vector2d(0.0, 1.0);
    inst.probs = Eigen::Vector2d(1.0 - p, p);
    inst.s0 = normal(rng);
    inst.gamma = 3.0 * unit(rng);
    const double lp_max = solve_stratum(inst, Direction::kMax).objective;
    const double lp_min = solve_stratum(inst, Direction::kMin).objective;
    const double cf_max = closed_form_binary(p, inst.s0, inst.gamma, Direction::kMax);
    const double cf_min = closed_form_binary(p, inst.s0, inst.gamma, Direction::kMin);
    VerificationLine line;
    line.instance_id = id;
    line.kind = "binary";
    line.lp_value = lp_max;
    line.closed_form = cf_max;
    line.gap = std::max(std::abs(lp_max - cf_max), std::abs(lp_min - cf_min));
    line.tolerance = 1e-9;
    line.pass = line.gap <= line.tolerance;
    report.lines.push_back(line);
  }

  for (int k = 0; k < n_continuous; ++k) {
    const int id = n_binary + k;
    CounterRng rng = root.split(static_cast<std::uint64_t>(id));
    double spacing = 0.0;
    const StratumInstance inst = gridded_instance(rng, spacing);
    const double lp_max = solve_stratum(inst, Direction::kMax).objective;
    const double lp_min = solve_stratum(inst, Direction::kMin).objective;
    const double cf_max = closed_form_gridded(inst, spacing, Direction::kMax);
    const double cf_min = closed_form_gridded(inst, spacing, Direction::kMin);
    VerificationLine line;
    line.instance_id = id;
    line.kind = "continuous";
    line.lp_value = lp_max;
    line.closed_form = cf_max;
    line.gap = std::max(std::abs(lp_max - cf_max), std::abs(lp_min - cf_min));
    // Rounding slack on top of the atom bound.
    line.tolerance = inst.gamma * median_atom_mass(inst) * spacing +
                     1e-12 * (1.0 + inst.y_values.cwiseAbs().maxCoeff());
    line.pass = line.gap <= line.tolerance;
    report.lines.push_back(line);
  }
  return report;
}

// ------------------------------------------------------------- Rosenbaum

RosenbaumModel RosenbaumModel::standard_normal(double gamma_r) {
  RosenbaumModel model;
  model.eta = [](double a, double) { return std::exp(-0.5 * a * a); };
  model.gamma_r = gamma_r;
  model.u_values = {0.0, 0.5, 1.0};
  model.u_probs = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  return model;
}

bool ModelReport::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.pass; });
}

namespace {

class ModelEvaluator {
 public:
  ModelEvaluator(const RosenbaumModel& model, double x) : model_(model), x_(x) {
    for (double u : model.u_values) {
      const double z = trapezoid([&](double a) { return unnormalized(a, u); }, model.a_lo,
                                 model.a_hi, model.quadrature_points);
      log_zeta_.push_back(std::log(model.normalizer_scale / z));
    }
    marginal_norm_ = trapezoid([&](double a) { return mixture(a); }, model.a_lo, model.a_hi,
                               model.quadrature_points);
  }

  std::size_t size() const { return log_zeta_.size(); }
  double u(std::size_t k) const { return model_.u_values[k]; }

  double log_conditional(double a, std::size_t k) const {
    return log_zeta_[k] + std::log(model_.eta(a, x_)) + model_.gamma_r * a * u(k);
  }
  double conditional(double a, std::size_t k) const { return std::exp(log_conditional(a, k)); }

  double log_marginal(double a) const { return std::log(mixture(a) / marginal_norm_); }

  double posterior(double a, std::size_t k) const {
    return conditional(a, k) * model_.u_probs[k] / std::exp(log_marginal(a));
  }

  double conditional_score(double a, std::size_t k, double h) const {
    return (log_conditional(a + h, k) - log_conditional(a - h, k)) / (2.0 * h);
  }
  double marginal_score(double a, double h) const {
    return (log_marginal(a + h) - log_marginal(a - h)) / (2.0 * h);
  }

  double normalization(std::size_t k) const {
    return trapezoid([&](double a) { return conditional(a, k); }, model_.a_lo, model_.a_hi,
                     model_.quadrature_points);
  }

 private:
  double unnormalized(double a, double u) const {
    return model_.eta(a, x_) * std::exp(model_.gamma_r * a * u);
  }
  double mixture(double a) const {
    double sum = 0.0;
    for (std::size_t k = 0; k < log_zeta_.size(); ++k) {
      sum += model_.u_probs[k] * conditional(a, k);
    }
    return sum;
  }

  const RosenbaumModel& model_;
  double x_;
  std::vector<double> log_zeta_;
  double marginal_norm_ = 1.0;
};

void record(ModelCheck& check, double excess, double a, double a_prime, double u,
            bool& first) {
  if (first || excess > check.max_violation) {
    check.max_violation = excess;
    check.worst_a = a;
    check.worst_a_prime = a_prime;
    check.worst_u = u;
    first = false;
  }
}

void finish(ModelCheck& check) {
  check.max_violation = std::max(0.0, check.max_violation);
  check.pass = check.max_violation <= check.tolerance;
}

}  // namespace

ModelReport verify_model_implication(const RosenbaumModel& model,
                                     const std::vector<double>& a_grid, double x_fixed) {
  if (!model.eta) throw ConfigError("Rosenbaum model needs a base density shape");
  if (model.u_values.empty() || model.u_values.size() != model.u_probs.size()) {
    throw ConfigError("Rosenbaum model: u grid and probabilities must match");
  }
  if (!(model.gamma_r >= 0.0)) throw ConfigError("Rosenbaum model: gamma_r must be >= 0");
  for (double u : model.u_values) {
    if (u < 0.0 || u > 1.0) throw ConfigError("Rosenbaum model: u values must lie in [0, 1]");
  }
  if (a_grid.empty()) throw ConfigError("empty exposure grid");

  const ModelEvaluator ev(model, x_fixed);
  const double h = 1e-5;
  ModelReport report;

  ModelCheck norm{"normalization", 0.0, 1e-8};
  bool first = true;
  for (std::size_t k = 0; k < ev.size(); ++k) {
    record(norm, std::abs(ev.normalization(k) - 1.0), 0.0, 0.0, ev.u(k), first);
  }
  finish(norm);
  report.checks.push_back(norm);

  ModelCheck odds{"odds_ratio", 0.0, 1e-8};
  first = true;
  for (std::size_t k = 0; k < ev.size(); ++k) {
    for (double a : a_grid) {
      for (double ap : a_grid) {
        const double log_ratio = ev.log_conditional(ap, k) + ev.log_marginal(a) -
                                 ev.log_conditional(a, k) - ev.log_marginal(ap);
        record(odds, std::abs(log_ratio) - model.gamma_r * std::abs(a - ap), a, ap, ev.u(k),
               first);
      }
    }
  }
  finish(odds);
  report.checks.push_back(odds);

  ModelCheck gap{"score_gap", 0.0, 1e-6};
  ModelCheck identity{"score_identity", 0.0, 1e-6};
  bool first_gap = true;
  bool first_identity = true;
  for (double a : a_grid) {
    const double s_marginal = ev.marginal_score(a, h);
    double posterior_mean = 0.0;
    for (std::size_t k = 0; k < ev.size(); ++k) {
      const double s_cond = ev.conditional_score(a, k, h);
      record(gap, std::abs(s_cond - s_marginal) - model.gamma_r, a, a, ev.u(k), first_gap);
      posterior_mean += ev.posterior(a, k) * s_cond;
    }
    record(identity, std::abs(posterior_mean - s_marginal), a, a, 0.0, first_identity);
  }
  finish(gap);
  finish(identity);
  report.checks.push_back(gap);
  report.checks.push_back(identity);
  return report;
}

// ---------------------------------------------------------- ground truth

namespace {

struct Draw {
  Eigen::RowVectorXd x;
  double u = 0.0;
  double a = 0.0;
};

Draw draw_one(const DgpSpec& spec, const DgpCoefficients& c, CounterRng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Draw d;
  d.x.resize(spec.dim);
  for (int j = 0; j < spec.dim; ++j) d.x[j] = unit(rng);
  d.u = unit(rng) < normal_cdf(std::sin(d.x[0] + d.x[1])) ? 1.0 : 0.0;
  const double lin = c.theta.dot(d.x.transpose());
  if (spec.dose == DoseFamily::kGaussian) {
    std::normal_distribution<double> normal(lin + spec.zeta * d.u, 1.0);
    d.a = normal(rng);
  } else {
    const double rate = std::max(kGammaRateBase + lin - spec.zeta * d.u, kGammaRateFloor);
    std::gamma_distribution<double> gamma(kGammaShape, 1.0 / rate);
    d.a = gamma(rng);
  }
  return d;
}

}  // namespace

MonteCarloMean monte_carlo_ade(const DgpSpec& spec, const DgpCoefficients& coefficients,
                               long n_mc, std::uint64_t seed) {
  if (n_mc < 2) throw ConfigError("Monte Carlo needs at least two draws");
  if (spec.dim < 2) throw ConfigError("the design needs at least two covariates");
  CounterRng rng(seed, 0x74727574ULL);
  double sum = 0.0;
  double sum_sq = 0.0;
  for (long i = 0; i < n_mc; ++i) {
    const Draw d = draw_one(spec, coefficients, rng);
    double deriv = spec.eta + coefficients.eta_ax.dot(d.x.transpose());
    if (spec.outcome == OutcomeType::kBinary) {
      deriv *= normal_pdf(outcome_index(spec, coefficients, d.a, d.x, d.u));
    }
    sum += deriv;
    sum_sq += deriv * deriv;
  }
  const double n = static_cast<double>(n_mc);
  const double mean = sum / n;
  const double var = std::max(0.0, sum_sq / n - mean * mean) * n / (n - 1.0);
  return {mean, std::sqrt(var / n)};
}

double ground_truth_ade(const DgpSpec& spec, const DgpCoefficients& coefficients,
                        long n_mc, std::uint64_t seed) {
  if (spec.outcome == OutcomeType::kContinuous) {
    return spec.eta + 0.5 * coefficients.eta_ax.sum();
  }
  return monte_carlo_ade(spec, coefficients, n_mc, seed).mean;
}

IdentityCheck check_score_identity(const DgpSpec& spec, const DgpCoefficients& coefficients,
                                   long n_mc, std::uint64_t seed) {
  if (spec.dose != DoseFamily::kGaussian || spec.outcome != OutcomeType::kContinuous) {
    throw ConfigError("score identity check needs a Gaussian exposure and continuous outcome");
  }
  if (n_mc < 2) throw ConfigError("Monte Carlo needs at least two draws");
  CounterRng rng(seed, 0x6c656d6d61ULL);
  std::normal_distribution<double> noise(0.0, 1.0);
  double sum = 0.0;
  double sum_sq = 0.0;
  for (long i = 0; i < n_mc; ++i) {
    const Draw d = draw_one(spec, coefficients, rng);
    const double y = outcome_index(spec, coefficients, d.a, d.x, d.u) + noise(rng);
    const double minus_score =
        d.a - coefficients.theta.dot(d.x.transpose()) - spec.zeta * d.u;
    const double v = minus_score * y;
    sum += v;
    sum_sq += v * v;
  }
  const double n = static_cast<double>(n_mc);
  IdentityCheck out;
  out.analytic = spec.eta + 0.5 * coefficients.eta_ax.sum();
  out.monte_carlo = sum / n;
  out.se = std::sqrt(std::max(0.0, sum_sq / n - out.monte_carlo * out.monte_carlo) / (n - 1.0));
  out.pass = std::abs(out.analytic - out.monte_carlo) <= 4.0 * out.se;
  return out;
}

}  // namespace adesens
