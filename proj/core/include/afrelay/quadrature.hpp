#pragma once

#include <vector>

namespace afr {

// Gauss-Hermite rule for the standard normal measure: E f(Z) ~= sum_i w_i f(x_i), Z ~ N(0,1).
struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
    int order = 0;
};

// Cached, immutable rules; thread-safe.
const QuadratureRule& gauss_hermite(int order);

// Escalation ladder used by the scalar engine.
inline constexpr int kQuadOrders[] = {64, 128, 256};
inline constexpr double kQuadTol = 1e-9;

}  // namespace afr
