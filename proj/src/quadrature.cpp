#include "gpbnn/quadrature.hpp"

#include <Eigen/Eigenvalues>

#include <array>
#include <cmath>
#include <mutex>
#include <numbers>

namespace gpbnn {

namespace {

// Orthonormal Hermite functions psi_n (w.r.t. exp(-x^2)); returns
// (psi_order(x), psi_{order-1}(x)). Avoids the overflow of H_n for large n.
std::pair<double, double> orthonormal_hermite(int order, double x) {
  double prev = 0.0;
  double cur = 1.0 / std::sqrt(std::sqrt(std::numbers::pi));
  for (int n = 0; n < order; ++n) {
    const double next = std::sqrt(2.0 / (n + 1)) * x * cur - std::sqrt(static_cast<double>(n) / (n + 1)) * prev;
    prev = cur;
    cur = next;
  }
  return {cur, prev};
}

}  // namespace

GHRule gh_rule(int order) {
  if (order < 1 || order > kMaxGHOrder)
    throw InvalidArgument("Gauss-Hermite order must lie in [1, " + std::to_string(kMaxGHOrder) + "]");
  const Index s = order;

  Matrix jacobi = Matrix::Zero(s, s);
  for (Index k = 1; k < s; ++k) {
    jacobi(k, k - 1) = std::sqrt(static_cast<double>(k) / 2.0);
    jacobi(k - 1, k) = jacobi(k, k - 1);
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(jacobi, Eigen::EigenvaluesOnly);
  Vector nodes = eig.eigenvalues();

  for (Index j = 0; j < s; ++j) {
    double z = nodes(j);
    for (int it = 0; it < 4; ++it) {
      const auto [p, q] = orthonormal_hermite(order, z);
      const double dp = std::sqrt(2.0 * order) * q;
      if (dp == 0.0) break;
      z -= p / dp;
    }
    nodes(j) = z;
  }
  // Enforce exact symmetry.
  for (Index j = 0; j < s / 2; ++j) {
    const double a = 0.5 * (nodes(s - 1 - j) - nodes(j));
    nodes(j) = -a;
    nodes(s - 1 - j) = a;
  }
  if (s % 2 == 1) nodes(s / 2) = 0.0;

  GHRule rule;
  rule.order = order;
  rule.nodes = nodes;
  rule.weights.resize(s);
  for (Index j = 0; j < s; ++j) {
    const double q = orthonormal_hermite(order, nodes(j)).second;
    rule.weights(j) = 1.0 / (order * q * q);
  }
  for (Index j = 0; j < s / 2; ++j) {
    const double w = 0.5 * (rule.weights(j) + rule.weights(s - 1 - j));
    rule.weights(j) = w;
    rule.weights(s - 1 - j) = w;
  }
  rule.normalized_weights = rule.weights / std::sqrt(std::numbers::pi);
  return rule;
}

const GHRule& cached_gh_rule(int order) {
  static std::array<std::once_flag, kMaxGHOrder + 1> flags;
  static std::array<GHRule, kMaxGHOrder + 1> rules;
  if (order < 1 || order > kMaxGHOrder)
    throw InvalidArgument("Gauss-Hermite order must lie in [1, " + std::to_string(kMaxGHOrder) + "]");
  std::call_once(flags[static_cast<std::size_t>(order)],
                 [order] { rules[static_cast<std::size_t>(order)] = gh_rule(order); });
  return rules[static_cast<std::size_t>(order)];
}

}  // namespace gpbnn
