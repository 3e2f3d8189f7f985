#pragma once

#include <cmath>
#include <vector>

#include "gibbs/common.hpp"

namespace gibbs {

// Gauss-Legendre rule rescaled to [0,1]; weights sum to 1 exactly up to
// roundoff, which keeps Ulam row sums equal to the map degree.
struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;

  static GaussLegendre create(int q) {
    if (q < 1) throw Error("quadrature order must be >= 1");
    GaussLegendre rule;
    rule.nodes.resize(static_cast<std::size_t>(q));
    rule.weights.resize(static_cast<std::size_t>(q));
    for (int i = 0; i < q; ++i) {
      // Newton on P_q from the Chebyshev-like initial guess.
      double x = std::cos(3.14159265358979323846 * (i + 0.75) / (q + 0.5));
      double dp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= q; ++k) {
          double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        dp = q * (x * p1 - p0) / (x * x - 1.0);
        double dx = p1 / dp;
        x -= dx;
        if (std::fabs(dx) < 1e-16) break;
      }
      rule.nodes[static_cast<std::size_t>(q - 1 - i)] = 0.5 * (1.0 + x);
      rule.weights[static_cast<std::size_t>(q - 1 - i)] =
          1.0 / ((1.0 - x * x) * dp * dp);
    }
    return rule;
  }
};

}  // namespace gibbs
