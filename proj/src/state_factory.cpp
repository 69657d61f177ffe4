#include "wigneg/state_factory.hpp"

#include <cmath>
#include <sstream>

#include "wigneg/errors.hpp"
#include "wigneg/phase_space.hpp"

namespace wigneg {

namespace {

constexpr const char* kGrammar =
    "expected fock:n | coherent:re,im | squeezed:r,psi | cubic:gamma,r | sub:alpha,r | "
    "add:alpha,r | cat:alpha,phi,theta | lossy1:beta | pair:beta";

std::vector<double> parse_args(const std::string& text, std::size_t count) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(tok, &used);
        } catch (const std::exception&) {
            throw InvalidArgument("state spec: bad number '" + tok + "'; " + kGrammar);
        }
        if (used != tok.size())
            throw InvalidArgument("state spec: bad number '" + tok + "'; " + kGrammar);
        out.push_back(v);
    }
    if (out.size() != count)
        throw InvalidArgument("state spec: wrong argument count; " + std::string(kGrammar));
    return out;
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

// Smallest dim holding all but `tail` of a Poisson(|alpha|^2) photon
// distribution, plus margin.
int coherent_dim_guess(Complex alpha, double tail) {
    const double lambda = std::norm(alpha);
    double term = std::exp(-lambda), cum = term;
    int k = 0;
    while (cum < 1.0 - 0.25 * tail && k < 4000) {
        ++k;
        term *= lambda / k;
        cum += term;
    }
    return k + 4;
}

// Same for the even-photon distribution of squeezed vacuum.
int squeezed_dim_guess(double r, double tail) {
    const double t2 = std::tanh(std::abs(r)) * std::tanh(std::abs(r));
    double w = 1.0 / std::cosh(std::abs(r));  // |<0|S|0>|^2
    double cum = w;
    int k = 0;
    while (cum < 1.0 - 0.25 * tail && k < 4000) {
        w *= t2 * (2.0 * k + 1.0) / (2.0 * k + 2.0);
        cum += w;
        ++k;
    }
    return 2 * k + 4;
}

using BuildFn = std::function<PureStateVector(int dim)>;

// Retry a single-mode construction, growing the truncation as instructed by
// the overflow diagnostics.
PureStateVector build_with_retry(int dim, const BuildFn& fn) {
    for (int attempt = 0; attempt < 16; ++attempt) {
        try {
            return fn(dim);
        } catch (const TruncationOverflow& e) {
            int next = dim + 8;
            if (!e.suggested_dims.empty()) next = std::max(next, e.suggested_dims.front());
            next = std::max(next, dim + dim / 4);
            dim = next;
        }
    }
    return fn(dim);  // last attempt surfaces the overflow to the caller
}

}  // namespace

// ---------- spec parsing ----------

StateSpec StateSpec::parse(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos)
        throw InvalidArgument("state spec '" + text + "': missing ':'; " + kGrammar);
    const std::string family = text.substr(0, colon);
    const std::string args = text.substr(colon + 1);

    StateSpec s;
    if (family == "fock") {
        const auto a = parse_args(args, 1);
        if (a[0] < 0 || a[0] != std::floor(a[0]))
            throw InvalidArgument("fock: photon number must be a non-negative integer");
        s.family = Family::fock;
        s.n = static_cast<int>(a[0]);
    } else if (family == "coherent") {
        const auto a = parse_args(args, 2);
        s.family = Family::coherent;
        s.alpha = Complex(a[0], a[1]);
    } else if (family == "squeezed") {
        const auto a = parse_args(args, 2);
        s.family = Family::squeezed;
        s.r = a[0];
        s.psi = a[1];
    } else if (family == "cubic") {
        const auto a = parse_args(args, 2);
        s.family = Family::cubic;
        s.gamma = a[0];
        s.r = a[1];
    } else if (family == "sub" || family == "add") {
        const auto a = parse_args(args, 2);
        s.family = family == "sub" ? Family::sub : Family::add;
        s.alpha = Complex(a[0], 0.0);
        s.r = a[1];
    } else if (family == "cat") {
        const auto a = parse_args(args, 3);
        s.family = Family::cat;
        s.alpha = Complex(a[0], 0.0);
        s.phi = a[1];
        s.theta = a[2];
    } else if (family == "lossy1") {
        const auto a = parse_args(args, 1);
        if (a[0] < 0.0 || a[0] > 1.0) throw InvalidArgument("lossy1: beta must lie in [0, 1]");
        s.family = Family::lossy1;
        s.beta = a[0];
    } else if (family == "pair") {
        const auto a = parse_args(args, 1);
        if (a[0] < 0.0 || a[0] > 1.0) throw InvalidArgument("pair: beta must lie in [0, 1]");
        s.family = Family::pair;
        s.beta = a[0];
    } else {
        throw InvalidArgument("state spec: unknown family '" + family + "'; " + kGrammar);
    }
    return s;
}

std::string StateSpec::text() const {
    switch (family) {
        case Family::fock:
            return "fock:" + std::to_string(n);
        case Family::coherent:
            return "coherent:" + fmt(alpha.real()) + "," + fmt(alpha.imag());
        case Family::squeezed:
            return "squeezed:" + fmt(r) + "," + fmt(psi);
        case Family::cubic:
            return "cubic:" + fmt(gamma) + "," + fmt(r);
        case Family::sub:
            return "sub:" + fmt(alpha.real()) + "," + fmt(r);
        case Family::add:
            return "add:" + fmt(alpha.real()) + "," + fmt(r);
        case Family::cat:
            return "cat:" + fmt(alpha.real()) + "," + fmt(phi) + "," + fmt(theta);
        case Family::lossy1:
            return "lossy1:" + fmt(beta);
        case Family::pair:
            return "pair:" + fmt(beta);
    }
    return "?";
}

bool is_pure(const StateValue& s) { return std::holds_alternative<PureStateVector>(s); }

const ModeLayout& layout_of(const StateValue& s) {
    return std::visit([](const auto& v) -> const ModeLayout& { return v.layout(); }, s);
}

DensityMatrix to_density(const StateValue& s) {
    if (is_pure(s)) return DensityMatrix::from_pure(std::get<PureStateVector>(s));
    return std::get<DensityMatrix>(s);
}

// ---------- constructors ----------

PureStateVector fock_state(int n, int dim) {
    if (n < 0) throw InvalidArgument("fock_state: n must be >= 0");
    if (n >= dim) throw InvalidArgument("fock_state: need dim > n");
    Eigen::VectorXcd amp = Eigen::VectorXcd::Zero(dim);
    amp(n) = 1.0;
    return PureStateVector(ModeLayout({dim}), std::move(amp));
}

PureStateVector coherent_state(Complex alpha, int dim, const NumericsConfig& cfg) {
    return apply_gaussian_unitary(fock_state(0, dim),
                                  GaussianUnitarySpec::displacement(alpha, 0), cfg);
}

PureStateVector squeezed_state(double r, double psi, int dim, const NumericsConfig& cfg) {
    return apply_gaussian_unitary(fock_state(0, dim), GaussianUnitarySpec::squeeze(r, psi, 0),
                                  cfg);
}

namespace {

GeneratorBuilder cubic_gate_builder(double gamma) {
    return [gamma](const std::vector<int>& dims) {
        const Eigen::MatrixXcd x = position_op(dims.at(0));
        return (Complex(0.0, gamma) * (x * x * x)).eval();
    };
}

}  // namespace

PureStateVector cubic_state(double gamma, double r, int dim, const NumericsConfig& cfg) {
    PureStateVector psi = squeezed_state(r, 0.0, dim, cfg);
    return apply_generated_unitary(psi, cubic_gate_builder(gamma), {0}, cfg);
}

PureStateVector photon_sub_state(Complex alpha, double r, int dim, const NumericsConfig& cfg) {
    if (std::norm(alpha) + std::sinh(r) * std::sinh(r) < 1e-14)
        throw UndefinedState("sub: photon subtraction from vacuum yields no state");
    PureStateVector g = squeezed_state(r, 0.0, dim, cfg);
    g = apply_gaussian_unitary(g, GaussianUnitarySpec::displacement(alpha, 0), cfg);
    const auto& amp = g.amplitudes();
    Eigen::VectorXcd lowered = Eigen::VectorXcd::Zero(dim);
    for (int n = 1; n < dim; ++n) lowered(n - 1) = std::sqrt(static_cast<double>(n)) * amp(n);
    const double n2 = lowered.squaredNorm();
    if (n2 < 1e-12) throw UndefinedState("sub: subtracted state has vanishing norm");
    return PureStateVector(ModeLayout({dim}), lowered / std::sqrt(n2));
}

PureStateVector photon_add_state(Complex alpha, double r, int dim, const NumericsConfig& cfg) {
    PureStateVector g = squeezed_state(r, 0.0, dim, cfg);
    g = apply_gaussian_unitary(g, GaussianUnitarySpec::displacement(alpha, 0), cfg);
    const auto& amp = g.amplitudes();
    // Raising the top retained level would leave the space; that amplitude
    // must already be negligible.
    const double lost = dim * std::norm(amp(dim - 1));
    if (lost > cfg.eps_trunc)
        throw TruncationOverflow("add: top-level amplitude too large for a^dag", {dim + 8});
    Eigen::VectorXcd raised = Eigen::VectorXcd::Zero(dim);
    for (int n = 0; n + 1 < dim; ++n) raised(n + 1) = std::sqrt(n + 1.0) * amp(n);
    return PureStateVector(ModeLayout({dim}), raised / raised.norm());
}

PureStateVector cat_state(Complex alpha, double phi, double theta, int dim,
                          const NumericsConfig& cfg) {
    const double k = 1.0 + std::sin(2.0 * phi) * std::cos(theta) * std::exp(-2.0 * std::norm(alpha));
    if (k < 1e-12) throw UndefinedState("cat: branches cancel, no normalizable state");
    const double la = std::abs(alpha);
    const double arga = std::arg(alpha);
    const Complex w1 = std::cos(phi);
    const Complex w2 = std::sin(phi) * std::polar(1.0, theta);
    Eigen::VectorXcd amp(dim);
    double mass = 0.0;
    for (int n = 0; n < dim; ++n) {
        // alpha^n / sqrt(n!) in log form to survive large |alpha|.
        const double mag = (la > 0.0)
                               ? std::exp(n * std::log(la) - 0.5 * std::lgamma(n + 1.0) -
                                          0.5 * std::norm(alpha))
                               : (n == 0 ? 1.0 : 0.0);
        const Complex base = mag * std::polar(1.0, n * arga);
        const double sign = (n % 2 == 0) ? 1.0 : -1.0;
        amp(n) = (w1 * base + w2 * sign * base) / std::sqrt(k);
        mass += std::norm(amp(n));
    }
    if (mass < 1.0 - cfg.eps_trunc) {
        const int bigger = std::max(dim + 8, coherent_dim_guess(alpha, cfg.eps_trunc));
        throw TruncationOverflow("cat: truncation holds only " + std::to_string(mass) +
                                     " of the state",
                                 {bigger});
    }
    return PureStateVector(ModeLayout({dim}), std::move(amp), true, 2.0 * cfg.eps_trunc);
}

DensityMatrix lossy_single_photon(double beta) {
    if (beta < 0.0 || beta > 1.0) throw InvalidArgument("lossy1: beta must lie in [0, 1]");
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(2, 2);
    m(0, 0) = 1.0 - beta;
    m(1, 1) = beta;
    return DensityMatrix(ModeLayout({2}), std::move(m));
}

PureStateVector pair_superposition(double beta) {
    if (beta < 0.0 || beta > 1.0) throw InvalidArgument("pair: beta must lie in [0, 1]");
    Eigen::VectorXcd amp = Eigen::VectorXcd::Zero(4);
    amp(0) = std::sqrt(1.0 - beta);  // |00>
    amp(3) = std::sqrt(beta);        // |11>
    return PureStateVector(ModeLayout({2, 2}), std::move(amp));
}

DensityMatrix thermal_state(double nbar, int dim) {
    if (nbar < 0.0) throw InvalidArgument("thermal_state: nbar must be >= 0");
    if (dim < 1) throw InvalidArgument("thermal_state: dim must be >= 1");
    const double q = nbar / (1.0 + nbar);
    const double tail = std::pow(q, dim);  // exact mass beyond the cutoff
    if (tail > 1e-8) {
        const int needed = q > 0.0 ? static_cast<int>(std::ceil(std::log(1e-8) / std::log(q))) + 2
                                   : 1;
        throw TruncationOverflow("thermal_state: geometric tail " + std::to_string(tail),
                                 {std::max(needed, dim + 8)});
    }
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim, dim);
    double w = 1.0 - q;
    double sum = 0.0;
    for (int n = 0; n < dim; ++n) {
        m(n, n) = w;
        sum += w;
        w *= q;
    }
    m /= sum;  // renormalize the truncated distribution
    return DensityMatrix(ModeLayout({dim}), std::move(m));
}

// ---------- dispatch ----------

StateValue build(const StateSpec& spec, const ModeLayout& layout, const NumericsConfig& cfg) {
    using F = StateSpec::Family;
    const bool two_mode = spec.family == F::pair;
    if (layout.modes() != (two_mode ? 2 : 1))
        throw InvalidArgument("build: layout mode count does not match family");
    const int dim = layout.dims[0];
    switch (spec.family) {
        case F::fock:
            return fock_state(spec.n, dim);
        case F::coherent:
            return coherent_state(spec.alpha, dim, cfg);
        case F::squeezed:
            return squeezed_state(spec.r, spec.psi, dim, cfg);
        case F::cubic:
            return cubic_state(spec.gamma, spec.r, dim, cfg);
        case F::sub:
            return photon_sub_state(spec.alpha, spec.r, dim, cfg);
        case F::add:
            return photon_add_state(spec.alpha, spec.r, dim, cfg);
        case F::cat:
            return cat_state(spec.alpha, spec.phi, spec.theta, dim, cfg);
        case F::lossy1:
            if (dim != 2) throw InvalidArgument("lossy1: fixed at dim 2");
            return lossy_single_photon(spec.beta);
        case F::pair:
            if (layout.dims[0] != 2 || layout.dims[1] != 2)
                throw InvalidArgument("pair: fixed at dims {2, 2}");
            return pair_superposition(spec.beta);
    }
    throw InvalidArgument("build: unknown family");
}

StateValue build_auto(const StateSpec& spec, const NumericsConfig& cfg) {
    using F = StateSpec::Family;
    switch (spec.family) {
        case F::fock:
            return fock_state(spec.n, spec.n + 1);
        case F::coherent:
            return build_with_retry(coherent_dim_guess(spec.alpha, cfg.eps_trunc),
                                    [&](int d) { return coherent_state(spec.alpha, d, cfg); });
        case F::squeezed:
            return build_with_retry(squeezed_dim_guess(spec.r, cfg.eps_trunc),
                                    [&](int d) { return squeezed_state(spec.r, spec.psi, d, cfg); });
        case F::cubic: {
            // Double the truncation until the state's log-negativity settles.
            int dim = 32;
            double prev = std::numeric_limits<double>::quiet_NaN();
            PureStateVector best = fock_state(0, 1);
            for (int attempt = 0; attempt < 14; ++attempt) {
                PureStateVector st = fock_state(0, 1);
                try {
                    st = cubic_state(spec.gamma, spec.r, dim, cfg);
                } catch (const TruncationOverflow& e) {
                    dim = std::max(2 * dim, e.suggested_dims.empty() ? 0 : e.suggested_dims[0]);
                    continue;
                }
                const double w = wln(st, cfg);
                if (!std::isnan(prev) && std::abs(w - prev) < 1e-4) return st;
                prev = w;
                best = st;
                dim *= 2;
            }
            throw ConvergenceFailure("build_auto(cubic): log-negativity did not settle", prev,
                                     prev);
        }
        case F::sub: {
            const double load = std::norm(spec.alpha) + std::pow(std::sinh(spec.r), 2);
            const int start = std::max(24, static_cast<int>(std::ceil(8.0 * (load + 1.0))));
            return build_with_retry(
                start, [&](int d) { return photon_sub_state(spec.alpha, spec.r, d, cfg); });
        }
        case F::add: {
            const double load = std::norm(spec.alpha) + std::pow(std::sinh(spec.r), 2);
            const int start = std::max(24, static_cast<int>(std::ceil(8.0 * (load + 1.0))));
            return build_with_retry(
                start, [&](int d) { return photon_add_state(spec.alpha, spec.r, d, cfg); });
        }
        case F::cat:
            return build_with_retry(
                coherent_dim_guess(spec.alpha, cfg.eps_trunc) + 2,
                [&](int d) { return cat_state(spec.alpha, spec.phi, spec.theta, d, cfg); });
        case F::lossy1:
            return lossy_single_photon(spec.beta);
        case F::pair:
            return pair_superposition(spec.beta);
    }
    throw InvalidArgument("build_auto: unknown family");
}

double verify_squeezing_cubic_identity(double gamma, double r, double rprime,
                                       const NumericsConfig& cfg) {
    const double boosted = std::exp(3.0 * rprime) * gamma;
    int dim = std::max(48, squeezed_dim_guess(std::abs(r) + std::abs(rprime), cfg.eps_trunc));
    double prev = std::numeric_limits<double>::quiet_NaN();
    for (int attempt = 0; attempt < 12; ++attempt) {
        double f = 0.0;
        try {
            const PureStateVector lhs = cubic_state(boosted, r, dim, cfg);
            PureStateVector rhs = cubic_state(gamma, r + rprime, dim, cfg);
            rhs = apply_gaussian_unitary(rhs, GaussianUnitarySpec::squeeze(-rprime, 0.0, 0), cfg);
            f = std::norm(overlap(lhs, rhs));
        } catch (const TruncationOverflow& e) {
            dim = std::max(2 * dim, e.suggested_dims.empty() ? 0 : e.suggested_dims[0]);
            continue;
        }
        if (!std::isnan(prev) && std::abs(f - prev) < 1e-8) return f;
        prev = f;
        dim *= 2;
    }
    throw ConvergenceFailure("verify_squeezing_cubic_identity: fidelity did not settle", prev,
                             prev);
}

}  // namespace wigneg
