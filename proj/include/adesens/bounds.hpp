#ifndef ADESENS_BOUNDS_HPP_
#define ADESENS_BOUNDS_HPP_

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <functional>
#include <utility>

#include "adesens/data.hpp"
#include "adesens/nuisance.hpp"
#include "adesens/types.hpp"

namespace adesens {

// Soft minimum of (p, 1 - p): -(1/t) log(exp(-t p) + exp(-t (1 - p))).
// Written around the larger exponent so it never overflows.
template <typename Scalar>
Scalar lse_h(Scalar p, Scalar t) {
  using std::abs;
  using std::exp;
  using std::log1p;
  using std::min;
  return min(p, Scalar(1) - p) - log1p(exp(-t * abs(Scalar(1) - Scalar(2) * p))) / t;
}

// d/dp lse_h(p, t) = tanh(t (1 - 2p) / 2).
template <typename Scalar>
Scalar lse_h_prime(Scalar p, Scalar t) {
  using std::tanh;
  return tanh(t * (Scalar(1) - Scalar(2) * p) / Scalar(2));
}

template <typename Derived>
Eigen::ArrayXd lse_h(const Eigen::ArrayBase<Derived>& p, double t) {
  return p.derived().unaryExpr([t](double v) { return lse_h(v, t); });
}

template <typename Derived>
Eigen::ArrayXd lse_h_prime(const Eigen::ArrayBase<Derived>& p, double t) {
  return p.derived().unaryExpr([t](double v) { return lse_h_prime(v, t); });
}

struct BoundPair {
  double psi_min = 0.0;
  double psi_max = 0.0;
};

// base -/+ gamma * correction.  Throws DomainError for gamma < 0.
inline BoundPair plugin_bounds_continuous(double base, double correction, double gamma) {
  if (!(gamma >= 0.0)) throw DomainError("sensitivity parameter gamma must be >= 0");
  return {base - gamma * correction, base + gamma * correction};
}

// y * sgn(y - m); ties contribute zero.
template <typename Scalar>
Scalar correction_continuous(Scalar y, Scalar m) {
  if (y > m) return y;
  if (y < m) return -y;
  return Scalar(0);
}

template <typename Scalar>
Scalar correction_binary_exact(Scalar p) {
  using std::min;
  return min(p, Scalar(1) - p);
}

// Known nonnegative weight w(a, x) with its exposure derivative.
struct WeightFn {
  std::function<double(double, CovariateRow)> w;
  std::function<double(double, CovariateRow)> w_prime;

  static WeightFn unit() {
    return {[](double, CovariateRow) { return 1.0; },
            [](double, CovariateRow) { return 0.0; }};
  }
};

struct Contribution {
  double base = 0.0;
  double correction = 0.0;
};

// Plug-in summands of the weighted functional: base = -w' y - w s y and
// correction = w * (y sgn(y - M) or lse_h(p, t)).
Contribution weighted_base_and_correction(const ObservedSample& sample,
                                          const NuisanceFit& fit, const WeightFn& weight,
                                          double lse_t);

}  // namespace adesens

#endif  // ADESENS_BOUNDS_HPP_
