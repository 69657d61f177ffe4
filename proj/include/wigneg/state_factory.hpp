#pragma once

#include <string>
#include <variant>

#include "wigneg/fock_core.hpp"

namespace wigneg {

// Parsed description of one state-family instance.  Text form (used by the
// CLI and by provenance headers):
//   fock:n | coherent:re,im | squeezed:r,psi | cubic:gamma,r | sub:alpha,r |
//   add:alpha,r | cat:alpha,phi,theta | lossy1:beta | pair:beta
struct StateSpec {
    enum class Family { fock, coherent, squeezed, cubic, sub, add, cat, lossy1, pair };

    Family family = Family::fock;
    int n = 0;                 // fock
    Complex alpha{0.0, 0.0};   // coherent / sub / add / cat
    double r = 0.0;            // squeezed / cubic / sub / add
    double psi = 0.0;          // squeezed
    double gamma = 0.0;        // cubic
    double phi = 0.0;          // cat mixing angle
    double theta = 0.0;        // cat relative phase
    double beta = 0.0;         // lossy1 / pair

    static StateSpec parse(const std::string& text);
    std::string text() const;
};

// Some families are pure vectors, some density matrices.
using StateValue = std::variant<PureStateVector, DensityMatrix>;

bool is_pure(const StateValue& s);
const ModeLayout& layout_of(const StateValue& s);
DensityMatrix to_density(const StateValue& s);

// Build at explicit truncation.  Raises TruncationOverflow (with a workable
// dimension) when the construction leaks more than cfg.eps_trunc.
StateValue build(const StateSpec& spec, const ModeLayout& layout,
                 const NumericsConfig& cfg = {});

// Build with automatically chosen truncation: analytic tail estimates where
// amplitudes are known, retry-on-overflow otherwise, and for the cubic family
// dimension doubling until the state's log-negativity moves by < 1e-4.
StateValue build_auto(const StateSpec& spec, const NumericsConfig& cfg = {});

// Individual constructors (dim = per-mode truncation).
PureStateVector fock_state(int n, int dim);
PureStateVector coherent_state(Complex alpha, int dim, const NumericsConfig& cfg = {});
PureStateVector squeezed_state(double r, double psi, int dim, const NumericsConfig& cfg = {});
// exp(i gamma x^3) applied to S(r)|0>; the gate generator is the matrix cube
// of the truncated position quadrature.
PureStateVector cubic_state(double gamma, double r, int dim, const NumericsConfig& cfg = {});
// a D(alpha) S(r) |0>, renormalized; undefined when r = 0 and alpha = 0.
PureStateVector photon_sub_state(Complex alpha, double r, int dim,
                                 const NumericsConfig& cfg = {});
// a^dag D(alpha) S(r) |0>, renormalized.
PureStateVector photon_add_state(Complex alpha, double r, int dim,
                                 const NumericsConfig& cfg = {});
// (cos(phi)|alpha> + sin(phi) e^{i theta} |-alpha>) / sqrt(K),
// K = 1 + sin(2 phi) cos(theta) exp(-2|alpha|^2).
PureStateVector cat_state(Complex alpha, double phi, double theta, int dim,
                          const NumericsConfig& cfg = {});
DensityMatrix lossy_single_photon(double beta);           // beta|1><1| + (1-beta)|0><0|
PureStateVector pair_superposition(double beta);          // sqrt(1-beta)|00> + sqrt(beta)|11>
DensityMatrix thermal_state(double nbar, int dim);

// Fidelity |<e^{3 rp} gamma, r | S(-rp) | gamma, r + rp>|^2 between the two
// constructions that the squeezing/cubic-gate commutation rule claims are the
// same state.  Dimension doubles until the fidelity stabilizes.
double verify_squeezing_cubic_identity(double gamma, double r, double rprime,
                                       const NumericsConfig& cfg = {});

}  // namespace wigneg
