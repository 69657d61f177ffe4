#pragma once

#include "wigneg/fock_core.hpp"
#include "wigneg/numerics.hpp"

namespace wigneg {

// Tensor quadrature grid over phase space.  Axes are ordered
// (x_1, p_1, ..., x_N, p_N); each axis carries a Gauss-Legendre rule on
// [-L, L], so every grid is symmetric about the origin.  Half-widths may
// differ per axis: strongly squeezed states need far more room along one
// quadrature than the other, and an isotropic box would waste almost all of
// its nodes there.
struct PhaseGrid {
    std::vector<double> half_widths;
    std::vector<int> node_counts;
    std::vector<QuadratureRule> axes;

    static PhaseGrid symmetric(std::vector<double> half_widths, std::vector<int> node_counts);
    int axis_count() const { return static_cast<int>(axes.size()); }
    long total_points() const;
};

// Covariance-scaled default grid: per-axis half-width
//   L_axis = max(6, 4 sqrt(2 n_eff + 1)) * sqrt(sigma_axis / nu) + |mean_axis|
// where nu = sqrt(det sigma_mode) and n_eff = (nu - 1)/2.  For isotropic
// states this reduces to the plain energy rule L = max(6, 4 sqrt(2<n>+1)).
// One-mode boxes additionally widen until each marginal keeps all but
// ~tol_int^2 of its mass inside: states whose local frequency grows with
// position reach much further in p than their covariance suggests.
PhaseGrid automatic_grid(const PureStateVector& psi, const NumericsConfig& cfg = {});
PhaseGrid automatic_grid(const DensityMatrix& rho, const NumericsConfig& cfg = {});

// W[|n><m|](x, p): Wigner kernel of a Fock dyad, evaluated by the upward
// Laguerre recurrence in exponentially weighted form (every intermediate is
// bounded by 1/pi, so high indices and far-out points cannot overflow).
Complex wigner_basis(int n, int m, double x, double p);

// W sampled on a grid, row-major in axis order (last axis fastest).
struct WignerSamples {
    PhaseGrid grid;
    std::vector<double> values;
    double integral = 0.0;  // plain quadrature of W, ~ trace of the state
};

WignerSamples wigner_of(const DensityMatrix& rho, const PhaseGrid& grid,
                        const NumericsConfig& cfg = {});
WignerSamples wigner_of(const PureStateVector& psi, const PhaseGrid& grid,
                        const NumericsConfig& cfg = {});

// One quadrature pass of integral |W| - 1 on a fixed grid (no refinement).
double negativity_on(const DensityMatrix& rho, const PhaseGrid& grid,
                     const NumericsConfig& cfg = {});
double negativity_on(const PureStateVector& psi, const PhaseGrid& grid,
                     const NumericsConfig& cfg = {});

struct NegativityReport {
    double negativity = 0.0;
    double log_negativity = 0.0;  // log2(negativity + 1)
    std::vector<double> half_widths;
    std::vector<int> node_counts;
    int refinements = 0;
    bool converged = false;
};

// Automatic grid plus refinement: node counts double, then half-widths, until
// successive passes agree to cfg.tol_int (relative).  Raises
// ConvergenceFailure with the last two values if the budget runs out.
NegativityReport negativity_report(const DensityMatrix& rho, const NumericsConfig& cfg = {});
NegativityReport negativity_report(const PureStateVector& psi, const NumericsConfig& cfg = {});

double negativity(const DensityMatrix& rho, const NumericsConfig& cfg = {});
double negativity(const PureStateVector& psi, const NumericsConfig& cfg = {});
double wln(const DensityMatrix& rho, const NumericsConfig& cfg = {});
double wln(const PureStateVector& psi, const NumericsConfig& cfg = {});

}  // namespace wigneg
