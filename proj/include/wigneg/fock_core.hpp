#pragma once

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "wigneg/numerics.hpp"

namespace wigneg {

using Complex = std::complex<double>;

// Truncated Fock dimensions, one per mode.  Composite indices are row-major:
// mode 0 varies slowest.
struct ModeLayout {
    std::vector<int> dims;

    ModeLayout() = default;
    explicit ModeLayout(std::vector<int> d);

    int modes() const { return static_cast<int>(dims.size()); }
    int total() const;
    bool operator==(const ModeLayout&) const = default;
};

// Normalized state vector on a truncated Fock space.  A small norm deficit
// (up to eps) is tolerated because unitaries report their truncation loss
// instead of silently renormalizing.
class PureStateVector {
  public:
    PureStateVector(ModeLayout layout, Eigen::VectorXcd amplitudes,
                    bool require_normalized = true, double eps = 1e-8);

    const ModeLayout& layout() const { return layout_; }
    const Eigen::VectorXcd& amplitudes() const { return amp_; }
    double norm2() const { return amp_.squaredNorm(); }
    PureStateVector renormalized() const;

  private:
    ModeLayout layout_;
    Eigen::VectorXcd amp_;
};

// Hermitian, positive-semidefinite operator with unit trace unless explicitly
// flagged unnormalized (conditioning returns unnormalized branches).
class DensityMatrix {
  public:
    DensityMatrix(ModeLayout layout, Eigen::MatrixXcd matrix,
                  bool unnormalized = false, double eps = 1e-8);
    static DensityMatrix from_pure(const PureStateVector& psi);

    const ModeLayout& layout() const { return layout_; }
    const Eigen::MatrixXcd& matrix() const { return mat_; }
    bool unnormalized() const { return unnormalized_; }
    double trace_real() const { return mat_.trace().real(); }
    DensityMatrix normalized() const;

  private:
    ModeLayout layout_;
    Eigen::MatrixXcd mat_;
    bool unnormalized_;
};

// Annihilation operator at the given truncation: a|n> = sqrt(n)|n-1>.
Eigen::MatrixXcd ladder(int dim);
Eigen::MatrixXcd number_op(int dim);
Eigen::MatrixXcd position_op(int dim);   // (a + a^dag)/sqrt(2)
Eigen::MatrixXcd momentum_op(int dim);   // (a - a^dag)/(i sqrt(2))

// Lift an operator acting on a subset of modes to the full space.  `modes`
// lists the operator's modes in its own tensor order.
Eigen::MatrixXcd embed_local(const Eigen::MatrixXcd& op, const ModeLayout& layout,
                             const std::vector<int>& modes);

// One quadratic-Hamiltonian unitary.  The generator G (with U = exp G) is
// assembled from truncated ladder matrices:
//   displacement  G = alpha a^dag - conj(alpha) a
//   squeeze       G = (xi/2) a^dag^2 - (conj(xi)/2) a^2,  xi = r e^{i psi}
//                 (psi = 0 stretches x: x -> e^r x in the Heisenberg picture)
//   beamsplitter  G = phi (e^{i theta} a^dag b - e^{-i theta} a b^dag),
//                 transmissivity T = cos^2 phi, default theta = pi
//   phase         G = -i phi a^dag a
struct GaussianUnitarySpec {
    enum class Kind { displacement, squeeze, beamsplitter, phase };

    Kind kind = Kind::phase;
    Complex alpha{0.0, 0.0};
    double r = 0.0, psi = 0.0;
    double transmissivity = 1.0, theta = 3.14159265358979323846;
    double phi = 0.0;
    std::vector<int> modes;

    static GaussianUnitarySpec displacement(Complex alpha, int mode);
    static GaussianUnitarySpec squeeze(double r, double psi, int mode);
    static GaussianUnitarySpec beamsplitter(double transmissivity, double theta,
                                            int mode_a, int mode_b);
    static GaussianUnitarySpec phase(double phi, int mode);
};

// Apply exp(G) for an anti-Hermitian generator supplied per local dimensions.
// The computation runs on a padded copy of the involved modes; probability
// mass that ends up above the original cutoffs is the truncation leakage.
// Leakage beyond cfg.eps_trunc raises TruncationOverflow with dimensions that
// would have sufficed.  `builder(dims)` returns G on the local product space.
using GeneratorBuilder = std::function<Eigen::MatrixXcd(const std::vector<int>&)>;

PureStateVector apply_generated_unitary(const PureStateVector& psi,
                                        const GeneratorBuilder& builder,
                                        const std::vector<int>& modes,
                                        const NumericsConfig& cfg = {});
DensityMatrix apply_generated_unitary(const DensityMatrix& rho,
                                      const GeneratorBuilder& builder,
                                      const std::vector<int>& modes,
                                      const NumericsConfig& cfg = {});

PureStateVector apply_gaussian_unitary(const PureStateVector& psi,
                                       const GaussianUnitarySpec& spec,
                                       const NumericsConfig& cfg = {});
DensityMatrix apply_gaussian_unitary(const DensityMatrix& rho,
                                     const GaussianUnitarySpec& spec,
                                     const NumericsConfig& cfg = {});

PureStateVector tensor(const PureStateVector& a, const PureStateVector& b);
DensityMatrix tensor(const DensityMatrix& a, const DensityMatrix& b);

// Trace out every mode not listed in `keep` (ascending, non-empty, strict subset).
DensityMatrix partial_trace(const DensityMatrix& rho, const std::vector<int>& keep);

// POVM element on a subset of modes: Hermitian with spectrum in [0, 1].
struct PovmEffect {
    std::string label;
    ModeLayout layout;
    Eigen::MatrixXcd matrix;

    PovmEffect(std::string label, ModeLayout layout, Eigen::MatrixXcd matrix,
               double eps = 1e-9);
};

// Measurement update for a mode-destroying effect E on modes M:
//   sigma = Tr_M[rho (E ⊗ 1)],  p = Tr sigma.
// sigma is returned unnormalized and flagged as such.  p below
// cfg.prob_floor raises ZeroProbability.
struct ConditionResult {
    DensityMatrix state;
    double probability;
};
ConditionResult condition(const DensityMatrix& rho, const PovmEffect& effect,
                          const std::vector<int>& modes,
                          const NumericsConfig& cfg = {});

// First and second ladder moments: mean_a[i] = <a_i>, aa(i,j) = <a_i a_j>,
// adag_a(i,j) = <a_i^dag a_j>.  Enough to assemble any quadrature covariance.
struct LadderMoments {
    Eigen::VectorXcd mean_a;
    Eigen::MatrixXcd aa;
    Eigen::MatrixXcd adag_a;
};
LadderMoments ladder_moments(const PureStateVector& psi);
LadderMoments ladder_moments(const DensityMatrix& rho);

// Per-mode occupation <n_i> and the smallest per-mode dimension holding all
// but `tail_mass` of the population (used to size grids and truncations).
std::vector<double> mode_occupation(const PureStateVector& psi);
std::vector<double> mode_occupation(const DensityMatrix& rho);
std::vector<int> occupied_dims(const PureStateVector& psi, double tail_mass);
std::vector<int> occupied_dims(const DensityMatrix& rho, double tail_mass);

Complex overlap(const PureStateVector& a, const PureStateVector& b);

// Convex mixture of equally-shaped density matrices; weights must sum to ~1.
DensityMatrix mix(const std::vector<std::pair<double, DensityMatrix>>& parts);

}  // namespace wigneg
