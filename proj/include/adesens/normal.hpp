#ifndef ADESENS_NORMAL_HPP_
#define ADESENS_NORMAL_HPP_

#include <cmath>
#include <numbers>

namespace adesens {

inline double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

inline double normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

// Inverse standard normal CDF (Wichura's AS241, relative accuracy ~1e-16).
// Throws DomainError outside (0, 1).
double normal_quantile(double p);

}  // namespace adesens

#endif  // ADESENS_NORMAL_HPP_
