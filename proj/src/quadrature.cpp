#include "adesens/quadrature.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

#include "adesens/types.hpp"

namespace adesens {

// Golub-Welsch: the nodes are the eigenvalues of the Jacobi matrix of the
// probabilists' Hermite polynomials, whose off-diagonal is sqrt(k).
GaussHermiteRule gauss_hermite(int size) {
  if (size < 1) throw DomainError("gauss_hermite: size must be >= 1");
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(size, size);
  for (int k = 1; k < size; ++k) {
    jacobi(k, k - 1) = jacobi(k - 1, k) = std::sqrt(static_cast<double>(k));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
  GaussHermiteRule rule;
  rule.nodes = eig.eigenvalues();
  rule.weights = eig.eigenvectors().row(0).transpose().array().square();
  rule.weights /= rule.weights.sum();
  // Symmetrize to remove eigen-solver noise.
  for (int q = 0; q < size / 2; ++q) {
    const int r = size - 1 - q;
    const double z = 0.5 * (rule.nodes[r] - rule.nodes[q]);
    const double w = 0.5 * (rule.weights[r] + rule.weights[q]);
    rule.nodes[q] = -z;
    rule.nodes[r] = z;
    rule.weights[q] = rule.weights[r] = w;
  }
  if (size % 2 == 1) rule.nodes[size / 2] = 0.0;
  return rule;
}

double trapezoid(const std::function<double(double)>& f, double lo, double hi,
                 int n) {
  if (n < 2) throw DomainError("trapezoid: need at least two points");
  const double h = (hi - lo) / (n - 1);
  double sum = 0.5 * (f(lo) + f(hi));
  for (int i = 1; i < n - 1; ++i) sum += f(lo + i * h);
  return sum * h;
}

}  // namespace adesens
