#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wigneg/fock_core.hpp"
#include "wigneg/numerics.hpp"

namespace wigneg {

// First and second quadrature moments in the ordering (x_1, p_1, ..., x_N, p_N)
// with x = (a + a^dag)/sqrt(2), p = (a - a^dag)/(i sqrt(2)).  The covariance is
// the symmetrized one, sigma_kl = <{dr_k, dr_l}>, so the vacuum gives the
// identity.  Physicality (sigma + i Omega >= 0) is what symplectic_eigenvalues
// verifies.
struct CovarianceData {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
};

// Antisymmetric form Omega = direct sum of [[0, 1], [-1, 0]] per mode.
Eigen::MatrixXd symplectic_form(int modes);

// Assemble (mean, cov) from ladder expectations; exact in the truncated space.
CovarianceData covariance_from_ladder(const LadderMoments& m);

// Moments of a state.  Raises TruncationOverflow when the state records a
// norm (trace) deficit beyond cfg.eps_trunc, i.e. it lost that much mass past
// the Fock cutoff during construction and its second moments no longer
// represent the untruncated state.  A deficit inside the budget is
// renormalized away before taking expectations; unnormalized conditional
// states are normalized first (their trace is an outcome probability).
CovarianceData moments(const PureStateVector& psi, const NumericsConfig& cfg = {});
CovarianceData moments(const DensityMatrix& rho, const NumericsConfig& cfg = {});

// One entry per mode, ascending.  Physical covariances give nu_j >= 1; values
// below 1 - 1e-8 raise InvalidState.
struct SymplecticSpectrum {
    std::vector<double> eigenvalues;
};

// Moduli of the eigenvalues of i*Omega*sigma, deduplicated in +/- pairs.  For
// a single mode this equals sqrt(det sigma).
SymplecticSpectrum symplectic_eigenvalues(const CovarianceData& cov);

// h(x) = ((x+1)/2) log2((x+1)/2) - ((x-1)/2) log2((x-1)/2), the von Neumann
// entropy in bits of a thermal mode with symplectic eigenvalue x.  Arguments
// in [1 - 1e-8, 1] clamp to h(1) = 0; smaller ones raise InvalidArgument.
double entropy_h(double x);

// Relative entropy of non-Gaussianity of a pure state: the entropy of the
// Gaussian state sharing its first and second moments, sum_j h(nu_j).
double delta_pure(const PureStateVector& psi, const NumericsConfig& cfg = {});

// Closed forms of the same quantity for three one-parameter families.
//   cubic phase on squeezed vacuum, u = e^{3r} gamma:   h(sqrt(1 + 9 u^2))
//   photon-subtracted coherent-squeezed (alpha, r):     h(sqrt(8/(|alpha|^2 csch^2 r + 1)^3 + 1))
//   photon-added    coherent-squeezed (alpha, r):       h(sqrt(8/(|alpha|^2 sech^2 r + 1)^3 + 1))
// Subtraction with r = 0 and alpha = 0 names no state (zero success
// probability) and raises UndefinedState; r = 0 with alpha != 0 returns the
// limit 0.
double delta_cubic_closed(double u);
double delta_sub_closed(Complex alpha, double r);
double delta_add_closed(Complex alpha, double r);

// ---------- energy frontier ----------

// Families whose maximal Wigner logarithmic negativity at fixed mean photon
// number the frontier traces.  addsub covers photon-subtracted/added states
// (their frontier coincides); below <n> = 1 it is realized by the two-level
// state sqrt(1-E)|0> + sqrt(E)|1>, above by |1> itself.
enum class FrontierFamily { fock, cubic, addsub, cat };

struct FrontierPoint {
    double nbar = 0.0;
    double wln = 0.0;
    bool converged = true;
    std::string params;  // family parameters realizing the point, "k=v;k=v"
};

// Largest attainable wln per family at each requested mean photon number.
//   fock   - only integer occupations exist; non-integer grid entries are
//            skipped (the curve is a lattice).
//   cubic  - golden-section search over the squeezing r (log-spaced bracket
//            grid, ties toward smaller r) maximizing e^{3r} gamma, with gamma
//            solved at each r so the numerically computed <n> hits the target.
//   addsub - closed two-branch rule described above.
//   cat    - equal-weight superposition of |alpha> and |-alpha>; theta = pi
//            (odd cat) for <n> >= 1, numeric theta search below.
// Targets must be positive.  A point whose optimizer or negativity integral
// fails to converge is reported with converged = false; the curve continues.
std::vector<FrontierPoint> energy_frontier(FrontierFamily family,
                                           const std::vector<double>& nbar_grid,
                                           const NumericsConfig& cfg = {});

}  // namespace wigneg
