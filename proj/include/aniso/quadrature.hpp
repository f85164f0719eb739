#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "aniso/error.hpp"

namespace aniso {

/// Gauss-Legendre rule mapped to [0,1].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

inline constexpr int kMaxGaussNodes = 64;

namespace detail {

inline GaussRule build_gauss_rule(int n) {
  GaussRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1, p1 = 0;
      for (int k = 1; k <= n; ++k) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1) * z * p1 - (k - 1.0) * p2) / k;
      }
      dp = n * (z * p0 - p1) / (z * z - 1);
      double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    {
      double p0 = 1, p1 = 0;
      for (int k = 1; k <= n; ++k) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1) * z * p1 - (k - 1.0) * p2) / k;
      }
      dp = n * (z * p0 - p1) / (z * z - 1);
    }
    double w = 2 / ((1 - z * z) * dp * dp);
    rule.nodes[i] = 0.5 * (1 - z);
    rule.nodes[n - 1 - i] = 0.5 * (1 + z);
    rule.weights[i] = rule.weights[n - 1 - i] = 0.5 * w;
  }
  return rule;
}

}  // namespace detail

/// n-point rule on [0,1], exact for polynomials of degree 2n-1.
inline const GaussRule& gauss_legendre(int n) {
  static const std::vector<GaussRule> table = [] {
    std::vector<GaussRule> t(kMaxGaussNodes + 1);
    for (int n = 1; n <= kMaxGaussNodes; ++n) t[n] = detail::build_gauss_rule(n);
    return t;
  }();
  if (n < 1 || n > kMaxGaussNodes)
    throw PreconditionError("Gauss rule size must be in 1.." + std::to_string(kMaxGaussNodes));
  return table[n];
}

}  // namespace aniso
