#pragma once

// Fixed Gaussian rules via Golub–Welsch.

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>
#include <vector>

namespace robust_bayes {

struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

namespace detail {

inline GaussRule golub_welsch(const Eigen::VectorXd& off_diagonal, double mu0) {
  const auto n = off_diagonal.size() + 1;
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index k = 0; k + 1 < n; ++k) {
    jacobi(k, k + 1) = off_diagonal[k];
    jacobi(k + 1, k) = off_diagonal[k];
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
  GaussRule rule;
  for (Eigen::Index k = 0; k < n; ++k) {
    rule.nodes.push_back(eig.eigenvalues()[k]);
    const double v0 = eig.eigenvectors()(0, k);
    rule.weights.push_back(mu0 * v0 * v0);
  }
  return rule;
}

}  // namespace detail

/// n-point Gauss–Legendre rule on [-1, 1].
inline GaussRule gauss_legendre(int n) {
  Eigen::VectorXd beta(n - 1);
  for (int k = 1; k < n; ++k) beta[k - 1] = k / std::sqrt(4.0 * k * k - 1.0);
  return detail::golub_welsch(beta, 2.0);
}

/// n-point Gauss–Hermite rule for the standard normal weight, so that
/// sum_k w_k h(x_k) approximates E[h(Z)], Z ~ N(0, 1).
inline GaussRule gauss_hermite_normal(int n) {
  Eigen::VectorXd beta(n - 1);
  for (int k = 1; k < n; ++k) beta[k - 1] = std::sqrt(static_cast<double>(k));
  return detail::golub_welsch(beta, 1.0);
}

}  // namespace robust_bayes
