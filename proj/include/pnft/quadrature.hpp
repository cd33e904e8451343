#pragma once

#include <vector>

namespace pnft {

struct GaussRule {
    std::vector<double> nodes;    // on [-1, 1], ascending
    std::vector<double> weights;
};

// Gauss-Legendre rule with n nodes; rules are computed once and cached.
const GaussRule& gauss_legendre(int n);

}  // namespace pnft
