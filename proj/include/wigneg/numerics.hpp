#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace wigneg {

// Tolerances and budgets shared across modules.  Callers that need a
// non-default budget copy this struct and override fields per call.
struct NumericsConfig {
    double eps_trunc = 1e-8;    // acceptable probability mass lost to a Fock cutoff
    double tol_int = 1e-6;      // relative tolerance for quadrature refinement
    double prob_floor = 1e-12;  // outcomes below this probability are an error
    double wigner_floor = 1e-14;  // |W| below this is treated as exactly zero
    int max_refinements = 8;    // grid-refinement budget for phase-space integrals
};

// Summation with a fixed pairwise reduction tree.  The order of operations
// depends only on the length, never on threading or chunking, so repeated runs
// produce bit-identical totals.
double pairwise_sum(std::span<const double> values);

// Gauss-Legendre rule with n nodes on [a, b].  Nodes ascend; weights positive.
struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};
QuadratureRule gauss_legendre(int n, double a, double b);

}  // namespace wigneg
