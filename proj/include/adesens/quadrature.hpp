#ifndef ADESENS_QUADRATURE_HPP_
#define ADESENS_QUADRATURE_HPP_

#include <Eigen/Core>

#include <functional>

namespace adesens {

// Gauss-Hermite rule for the standard normal weight: E[g(Z)] is approximated
// by sum_q weights[q] * g(nodes[q]).  Exact for polynomials of degree
// 2 * size - 1.
struct GaussHermiteRule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
};

GaussHermiteRule gauss_hermite(int size);

// Trapezoid rule on [lo, hi] with n >= 2 equally spaced points.
double trapezoid(const std::function<double(double)>& f, double lo, double hi,
                 int n);

}  // namespace adesens

#endif  // ADESENS_QUADRATURE_HPP_
