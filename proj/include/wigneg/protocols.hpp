#pragma once

#include "wigneg/fock_core.hpp"
#include "wigneg/numerics.hpp"

namespace wigneg {

// Acceptance window of the conditioning detector.
//   homodyne          x in [x_lo, x_hi] on the measured quadrature
//   heterodyne_ring   |alpha| <= c, phase averaged
//   heterodyne_sector a1 <= |alpha| <= a2 and th1 <= arg alpha <= th2
struct DetectorWindow {
    enum class Kind { homodyne, heterodyne_ring, heterodyne_sector };

    Kind kind = Kind::heterodyne_ring;
    double x_lo = 0.0, x_hi = 0.0;
    double c = 0.0;
    double a1 = 0.0, a2 = 0.0, th1 = 0.0, th2 = 0.0;

    static DetectorWindow homodyne(double half_width);  // centered interval
    static DetectorWindow homodyne_interval(double x_lo, double x_hi);
    static DetectorWindow heterodyne_ring(double c);
    static DetectorWindow heterodyne_sector(double a1, double a2, double th1, double th2);
};

// Phase-averaged heterodyne acceptance |alpha| <= c.  Diagonal in the Fock
// basis; entry n is the regularized lower incomplete gamma P(n+1, c^2).
// c = infinity gives the identity.
PovmEffect heterodyne_ring_effect(double c, int dim);

// Homodyne acceptance x in [x_lo, x_hi]: matrix elements are window integrals
// of oscillator-eigenfunction products, evaluated by an escalating
// Gauss-Legendre rule until they stabilize.
PovmEffect homodyne_interval_effect(double x_lo, double x_hi, int dim);

// Heterodyne acceptance over an annular sector.  Radial integrals reduce to
// incomplete-gamma differences and angular ones to closed-form phase factors,
// so every matrix element is exact.  a2 = infinity is allowed; the full plane
// gives the identity.
PovmEffect heterodyne_sector_effect(double a1, double a2, double th1, double th2, int dim);

PovmEffect window_effect(const DetectorWindow& window, int dim);

// Two copies of `input` interfere at a beam splitter of transmissivity T; the
// second output mode is measured and accepted inside `window`, the first mode
// is kept and normalized.  Figures of merit:
//   epsilon = (W(sigma) - W(rho)) / W(rho)      resource gain
//   eta     = p W(sigma) / (2 W(rho))           efficiency, <= 1
// with W the Wigner logarithmic negativity.  Inputs without any negativity
// raise DivisionUndefined; a window the output never reaches raises
// ZeroProbability.
struct ConcentrationResult {
    DensityMatrix output;
    double p = 0.0;
    double wln_in = 0.0;
    double wln_out = 0.0;
    double eta = 0.0;
    double epsilon = 0.0;
    int copies_in = 2;
    int copies_out = 1;
};
ConcentrationResult concentrate(const DensityMatrix& input, double transmissivity,
                                const DetectorWindow& window, const NumericsConfig& cfg = {});
ConcentrationResult concentrate(const PureStateVector& input, double transmissivity,
                                const DetectorWindow& window, const NumericsConfig& cfg = {});

// One copy of the two-mode superposition sqrt(1-beta)|00> + sqrt(beta)|11>;
// mode A is measured by a heterodyne sector window and mode B is kept.  The
// record compares the output's negativity against the *global* two-mode
// input, so delta_wln > 0 exhibits probabilistic concentration from a single
// copy while eta = p W(sigma) / W(psi) stays far below its bound of one.
// A window covering the whole plane reduces to the deterministic partial
// trace, for which delta_wln <= 0 always.
struct CounterexampleResult {
    DensityMatrix output;
    double beta = 0.0;
    double p = 0.0;
    double wln_in = 0.0;
    double wln_out = 0.0;
    double delta_wln = 0.0;
    double eta = 0.0;
};
CounterexampleResult counterexample_run(double beta, const DetectorWindow& window,
                                        const NumericsConfig& cfg = {});

}  // namespace wigneg
