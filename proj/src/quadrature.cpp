#include "bohm/quadrature.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

#include "bohm/error.hpp"

namespace bohm {

GaussLegendreRule gaussLegendre(int n) {
  if (n < 1)
    throw Error(ErrorCode::InvalidArgument, "Gauss-Legendre rule needs n >= 1");
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) {
    const double b = i / std::sqrt(4.0 * i * i - 1.0);
    jacobi(i, i - 1) = b;
    jacobi(i - 1, i) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
  GaussLegendreRule rule;
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double v0 = eig.eigenvectors()(0, i);
    rule.nodes[static_cast<std::size_t>(i)] = eig.eigenvalues()(i);
    rule.weights[static_cast<std::size_t>(i)] = 2.0 * v0 * v0;
  }
  // Symmetrize: removes the O(eps) asymmetry of the eigen solver.
  for (int i = 0; i < n / 2; ++i) {
    auto a = static_cast<std::size_t>(i), b = static_cast<std::size_t>(n - 1 - i);
    const double x = 0.5 * (rule.nodes[b] - rule.nodes[a]);
    const double w = 0.5 * (rule.weights[a] + rule.weights[b]);
    rule.nodes[a] = -x;
    rule.nodes[b] = x;
    rule.weights[a] = rule.weights[b] = w;
  }
  if (n % 2 == 1)
    rule.nodes[static_cast<std::size_t>(n / 2)] = 0.0;
  return rule;
}

} // namespace bohm
