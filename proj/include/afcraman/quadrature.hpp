#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "afcraman/constants.hpp"
#include "afcraman/errors.hpp"

namespace afcraman {

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

// Gauss-Legendre rule on [0, 1]. Nodes are Legendre roots found by Newton
// iteration from the Chebyshev initial guess; converges to machine precision
// in a handful of steps for any practical order.
inline QuadratureRule gauss_legendre_01(int n) {
    if (n < 1) throw validation_error("quadrature order must be >= 1");
    QuadratureRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        double x = std::cos(pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double step = p1 / dp;
            x -= step;
            if (std::abs(step) < 1e-15) break;
        }
        // Map from [-1, 1] to [0, 1]; weights halve accordingly.
        rule.nodes[n - 1 - i] = 0.5 * (1.0 + x);
        rule.weights[n - 1 - i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    return rule;
}

}  // namespace afcraman
