#pragma once

#include "gpbnn/types.hpp"

namespace gpbnn {

/// Physicists' Hermite polynomial H_order(x) via the three-term recurrence
/// H_{n+1} = 2x H_n - 2n H_{n-1}.
template <typename T>
T hermite_eval(int order, T x) {
  if (order < 0) throw InvalidArgument("Hermite order must be non-negative");
  T prev(1);
  if (order == 0) return prev;
  T cur = T(2) * x;
  for (int n = 1; n < order; ++n) {
    T next = T(2) * x * cur - T(2 * n) * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

/// Gauss-Hermite rule for the weight exp(-x^2).
struct GHRule {
  int order = 0;
  Vector nodes;               // strictly increasing, symmetric about 0
  Vector weights;             // sum to sqrt(pi)
  Vector normalized_weights;  // weights / sqrt(pi), sum to 1
};

inline constexpr int kMaxGHOrder = 64;

/// Nodes from the Jacobi matrix eigenvalues, polished by Newton on the
/// orthonormal recurrence; weights 2^{S-1} S! sqrt(pi) / (S^2 H_{S-1}(z)^2).
GHRule gh_rule(int order);

/// Same as gh_rule but computed once per order; safe for concurrent readers.
const GHRule& cached_gh_rule(int order);

}  // namespace gpbnn
