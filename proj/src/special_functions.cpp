#include "wigneg/special_functions.hpp"

#include <cmath>
#include <limits>

#include "wigneg/errors.hpp"

namespace wigneg {

namespace {

constexpr int kMaxIter = 500;
constexpr double kEps = 3.0e-15;
constexpr double kFpMin = std::numeric_limits<double>::min() / kEps;

// P(a,x) by its series representation; converges quickly for x < a + 1.
double gamma_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int n = 0; n < kMaxIter; ++n) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::abs(del) < std::abs(sum) * kEps)
            return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
    }
    throw ConvergenceFailure("reg_lower_gamma: series did not converge", sum - del, sum);
}

// Q(a,x) = 1 - P(a,x) by modified Lentz continued fraction; for x >= a + 1.
double gamma_cont_fraction(double a, double x) {
    double b = x + 1.0 - a;
    double c = 1.0 / kFpMin;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= kMaxIter; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < kFpMin) d = kFpMin;
        c = b + an / c;
        if (std::abs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps)
            return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
    }
    throw ConvergenceFailure("reg_lower_gamma: continued fraction did not converge", h, h);
}

}  // namespace

double reg_lower_gamma(double a, double x) {
    if (!(a > 0.0) || x < 0.0)
        throw InvalidArgument("reg_lower_gamma: need a > 0 and x >= 0");
    if (x == 0.0) return 0.0;
    if (std::isinf(x)) return 1.0;
    if (x < a + 1.0) return gamma_series(a, x);
    return 1.0 - gamma_cont_fraction(a, x);
}

void oscillator_eigenfunctions(double x, int count, std::vector<double>& out) {
    if (count < 1) throw InvalidArgument("oscillator_eigenfunctions: count must be >= 1");
    out.resize(count);
    // psi_0 = pi^{-1/4} exp(-x^2/2); psi_{n+1} = sqrt(2/(n+1)) x psi_n - sqrt(n/(n+1)) psi_{n-1}.
    const double psi0 = std::pow(M_PI, -0.25) * std::exp(-0.5 * x * x);
    out[0] = psi0;
    if (count == 1) return;
    out[1] = std::sqrt(2.0) * x * psi0;
    for (int n = 1; n + 1 < count; ++n) {
        out[n + 1] = std::sqrt(2.0 / (n + 1.0)) * x * out[n] -
                     std::sqrt(n / (n + 1.0)) * out[n - 1];
    }
}

}  // namespace wigneg
