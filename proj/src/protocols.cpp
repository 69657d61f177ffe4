#include "wigneg/protocols.hpp"

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "wigneg/errors.hpp"
#include "wigneg/phase_space.hpp"
#include "wigneg/special_functions.hpp"
#include "wigneg/state_factory.hpp"

namespace wigneg {

namespace {

constexpr double kPi = 3.14159265358979323846;
// Below this many bits of input negativity the protocol's figures of merit
// are ratios of numerical noise.
constexpr double kWlnDenomFloor = 1e-9;

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

DensityMatrix pad_single_mode(const DensityMatrix& rho, int dim) {
    const int d = rho.layout().dims[0];
    if (dim <= d) return rho;
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim, dim);
    m.topLeftCorner(d, d) = rho.matrix();
    return DensityMatrix(ModeLayout({dim}), std::move(m));
}

// Drop the unoccupied top of the Fock space (the conditioned output of an
// n-photon experiment lives in a 2n+1 block no matter how wide the
// intermediate arithmetic was).
DensityMatrix crop_single_mode(const DensityMatrix& rho, double tail_mass) {
    const int dim = occupied_dims(rho, tail_mass)[0];
    if (dim >= rho.layout().dims[0]) return rho;
    Eigen::MatrixXcd m = rho.matrix().topLeftCorner(dim, dim);
    m /= m.trace().real();
    return DensityMatrix(ModeLayout({dim}), std::move(m));
}

}  // namespace

// ---------- windows ----------

DetectorWindow DetectorWindow::homodyne(double half_width) {
    return homodyne_interval(-half_width, half_width);
}

DetectorWindow DetectorWindow::homodyne_interval(double x_lo, double x_hi) {
    if (!(x_lo < x_hi)) throw InvalidArgument("homodyne window is empty");
    DetectorWindow w;
    w.kind = Kind::homodyne;
    w.x_lo = x_lo;
    w.x_hi = x_hi;
    return w;
}

DetectorWindow DetectorWindow::heterodyne_ring(double c) {
    if (!(c > 0.0)) throw InvalidArgument("heterodyne ring cutoff must be positive");
    DetectorWindow w;
    w.kind = Kind::heterodyne_ring;
    w.c = c;
    return w;
}

DetectorWindow DetectorWindow::heterodyne_sector(double a1, double a2, double th1, double th2) {
    if (!(a1 >= 0.0) || !(a2 > a1))
        throw InvalidArgument("sector amplitude bounds need 0 <= a1 < a2");
    if (!(th1 < th2) || th2 - th1 > 2.0 * kPi + 1e-12)
        throw InvalidArgument("sector angles need th1 < th2 spanning at most a full turn");
    DetectorWindow w;
    w.kind = Kind::heterodyne_sector;
    w.a1 = a1;
    w.a2 = a2;
    w.th1 = th1;
    w.th2 = th2;
    return w;
}

// ---------- effects ----------

PovmEffect heterodyne_ring_effect(double c, int dim) {
    if (!(c > 0.0)) throw InvalidArgument("heterodyne ring cutoff must be positive");
    if (dim < 1) throw InvalidArgument("effect dimension must be positive");
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim, dim);
    const double c2 = c * c;
    for (int n = 0; n < dim; ++n)
        m(n, n) = std::isinf(c) ? 1.0 : reg_lower_gamma(static_cast<double>(n) + 1.0, c2);
    return PovmEffect("het_ring[c=" + fmt(c) + "]", ModeLayout({dim}), std::move(m));
}

PovmEffect homodyne_interval_effect(double x_lo, double x_hi, int dim) {
    if (!(x_lo < x_hi)) throw InvalidArgument("homodyne window is empty");
    if (dim < 1) throw InvalidArgument("effect dimension must be positive");
    // the eigenfunctions are numerically zero past the classical turning
    // point, so the window can be clipped there and the integrand is then a
    // low-degree polynomial times a Gaussian
    const double reach = std::sqrt(2.0 * dim - 1.0) + 6.0;
    const double lo = std::max(x_lo, -reach);
    const double hi = std::min(x_hi, reach);
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(dim, dim);
    if (lo < hi) {
        std::vector<double> eig;
        Eigen::VectorXd col(dim);
        Eigen::MatrixXd prev;
        for (int n = std::max(64, 2 * dim + 16);; n += n / 2) {
            m.setZero();
            const QuadratureRule rule = gauss_legendre(n, lo, hi);
            for (size_t k = 0; k < rule.nodes.size(); ++k) {
                oscillator_eigenfunctions(rule.nodes[k], dim, eig);
                for (int i = 0; i < dim; ++i) col(i) = eig[static_cast<size_t>(i)];
                m.selfadjointView<Eigen::Lower>().rankUpdate(col, rule.weights[k]);
            }
            m = m.selfadjointView<Eigen::Lower>();
            if (prev.size() > 0) {
                const double drift = (m - prev).cwiseAbs().maxCoeff();
                if (drift < 1e-13) break;
                if (n > 200000)
                    throw ConvergenceFailure("homodyne window matrix did not stabilize", drift,
                                             drift);
            }
            prev = m;
        }
    }
    return PovmEffect("hom[" + fmt(x_lo) + "," + fmt(x_hi) + "]", ModeLayout({dim}),
                      m.cast<Complex>());
}

PovmEffect heterodyne_sector_effect(double a1, double a2, double th1, double th2, int dim) {
    const DetectorWindow w = DetectorWindow::heterodyne_sector(a1, a2, th1, th2);
    if (dim < 1) throw InvalidArgument("effect dimension must be positive");
    // entry (n, m): (1/pi) Int a^{n+m+1} e^{-a^2} da  *  Int e^{i(n-m)th} dth
    // / sqrt(n! m!); substituting u = a^2 turns the radial part into a
    // regularized incomplete-gamma difference
    const auto radial = [&](int s) {
        const double a = 0.5 * static_cast<double>(s) + 1.0;
        const double upper = std::isinf(a2) ? 1.0 : reg_lower_gamma(a, a2 * a2);
        return 0.5 * std::tgamma(a) * (upper - reg_lower_gamma(a, a1 * a1));
    };
    const auto angular = [&](int q) -> Complex {
        if (q == 0) return th2 - th1;
        const Complex num = std::polar(1.0, q * th2) - std::polar(1.0, q * th1);
        return num / Complex(0.0, static_cast<double>(q));
    };
    Eigen::MatrixXcd m(dim, dim);
    for (int n = 0; n < dim; ++n) {
        for (int mm = 0; mm <= n; ++mm) {
            const double norm =
                std::exp(-0.5 * (std::lgamma(n + 1.0) + std::lgamma(mm + 1.0)));
            const Complex v = radial(n + mm) * angular(n - mm) * norm / kPi;
            m(n, mm) = v;
            m(mm, n) = std::conj(v);
        }
    }
    return PovmEffect("het_sector[a=" + fmt(a1) + ".." + fmt(a2) + ",th=" + fmt(th1) + ".." +
                          fmt(th2) + "]",
                      ModeLayout({dim}), std::move(m));
}

PovmEffect window_effect(const DetectorWindow& window, int dim) {
    switch (window.kind) {
        case DetectorWindow::Kind::homodyne:
            return homodyne_interval_effect(window.x_lo, window.x_hi, dim);
        case DetectorWindow::Kind::heterodyne_ring:
            return heterodyne_ring_effect(window.c, dim);
        case DetectorWindow::Kind::heterodyne_sector:
            return heterodyne_sector_effect(window.a1, window.a2, window.th1, window.th2, dim);
    }
    throw InvalidArgument("unknown detector window kind");
}

// ---------- concentration ----------

ConcentrationResult concentrate(const DensityMatrix& input, double transmissivity,
                                const DetectorWindow& window, const NumericsConfig& cfg) {
    if (input.layout().modes() != 1)
        throw InvalidArgument("concentration takes a single-mode input");
    if (input.unnormalized()) throw InvalidArgument("normalize the input state first");
    if (!(transmissivity > 0.0 && transmissivity < 1.0))
        throw InvalidArgument("beam-splitter transmissivity must lie in (0, 1)");

    const double wln_in = wln(input, cfg);
    if (wln_in <= kWlnDenomFloor)
        throw DivisionUndefined(
            "the input carries no Wigner negativity, so gain and efficiency are undefined");

    // photon number is conserved up to the measurement, so twice the input
    // cutoff is exact for the interferometer stage
    const int d = input.layout().dims[0];
    const int wide = 2 * d - 1;
    const DensityMatrix copy = pad_single_mode(input, wide);
    DensityMatrix both = tensor(copy, copy);
    both = apply_gaussian_unitary(
        both, GaussianUnitarySpec::beamsplitter(transmissivity, kPi, 0, 1), cfg);

    const PovmEffect effect = window_effect(window, wide);
    const ConditionResult branch = condition(both, effect, {1}, cfg);
    const DensityMatrix output = crop_single_mode(branch.state.normalized(), cfg.eps_trunc);

    ConcentrationResult res{output, branch.probability, wln_in, wln(output, cfg),
                            0.0,    0.0,                2,      1};
    res.eta = res.p * res.wln_out / (2.0 * res.wln_in);
    res.epsilon = (res.wln_out - res.wln_in) / res.wln_in;
    return res;
}

ConcentrationResult concentrate(const PureStateVector& input, double transmissivity,
                                const DetectorWindow& window, const NumericsConfig& cfg) {
    return concentrate(DensityMatrix::from_pure(input), transmissivity, window, cfg);
}

// ---------- single-copy counter-example ----------

CounterexampleResult counterexample_run(double beta, const DetectorWindow& window,
                                        const NumericsConfig& cfg) {
    if (!(beta > 0.0 && beta < 1.0)) throw InvalidArgument("beta must lie in (0, 1)");
    if (window.kind != DetectorWindow::Kind::heterodyne_sector)
        throw InvalidArgument("the single-copy run conditions on a heterodyne sector window");

    const PureStateVector psi = pair_superposition(beta);
    const double wln_in = wln(psi, cfg);
    if (wln_in <= kWlnDenomFloor)
        throw DivisionUndefined("the two-mode input carries no Wigner negativity at this beta");

    const PovmEffect effect = heterodyne_sector_effect(window.a1, window.a2, window.th1,
                                                       window.th2, psi.layout().dims[0]);
    const ConditionResult branch = condition(DensityMatrix::from_pure(psi), effect, {0}, cfg);
    const DensityMatrix output = branch.state.normalized();
    const double wln_out = wln(output, cfg);

    CounterexampleResult res{output,
                             beta,
                             branch.probability,
                             wln_in,
                             wln_out,
                             wln_out - wln_in,
                             branch.probability * wln_out / wln_in};
    return res;
}

}  // namespace wigneg
