#pragma once

#include <vector>

namespace wigneg {

// Regularized lower incomplete gamma P(a, x) = gamma(a, x) / Gamma(a),
// a > 0, x >= 0.  Series expansion for x < a + 1, continued fraction above.
double reg_lower_gamma(double a, double x);

// Harmonic-oscillator eigenfunctions psi_0..psi_{count-1} at position x, in
// the convention x = (a + a^dag)/sqrt(2):
//   psi_n(x) = (2^n n! sqrt(pi))^{-1/2} H_n(x) exp(-x^2/2).
// Uses the normalized upward recurrence; values deep in the forbidden region
// underflow to zero harmlessly.
void oscillator_eigenfunctions(double x, int count, std::vector<double>& out);

}  // namespace wigneg
