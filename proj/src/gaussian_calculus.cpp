#include "wigneg/gaussian_calculus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <chrono>
#include <cstdlib>
#include <map>

#include "wigneg/errors.hpp"
#include "wigneg/phase_space.hpp"
#include "wigneg/state_factory.hpp"

namespace wigneg {

namespace {

constexpr double kNuTol = 1e-8;        // slack below nu = 1 tolerated as rounding
constexpr double kPiVal = 3.14159265358979323846;
constexpr double kGoldenRatio = 0.61803398874989485;
// the analytic odd-cat norm 1 - e^{-2 a^2} loses its digits below this
constexpr double kCatAlphaOdd = 1e-2;
// away from theta = pi the norm stays well conditioned much further down
constexpr double kCatAlphaTiny = 1e-4;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

void guard_truncation(const ModeLayout& layout, double deficit, const NumericsConfig& cfg) {
    if (!(deficit > cfg.eps_trunc)) return;
    std::vector<int> suggested = layout.dims;
    for (int& d : suggested) d *= 2;
    throw TruncationOverflow("moments: state lost " + std::to_string(deficit) +
                                 " of its mass past the Fock cutoff",
                             suggested);
}

}  // namespace

// ---------- covariance assembly ----------

Eigen::MatrixXd symplectic_form(int modes) {
    if (modes < 1) throw InvalidArgument("symplectic_form: need at least one mode");
    Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(2 * modes, 2 * modes);
    for (int m = 0; m < modes; ++m) {
        omega(2 * m, 2 * m + 1) = 1.0;
        omega(2 * m + 1, 2 * m) = -1.0;
    }
    return omega;
}

CovarianceData covariance_from_ladder(const LadderMoments& m) {
    const int n = static_cast<int>(m.mean_a.size());
    const double rt2 = std::sqrt(2.0);
    CovarianceData out;
    out.mean.resize(2 * n);
    out.cov.resize(2 * n, 2 * n);
    for (int i = 0; i < n; ++i) {
        out.mean(2 * i) = rt2 * m.mean_a(i).real();
        out.mean(2 * i + 1) = rt2 * m.mean_a(i).imag();
    }
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const Complex a = m.aa(i, j);       // <a_i a_j>, symmetric
            const Complex b = m.adag_a(i, j);   // <a_i^dag a_j>, Hermitian
            const double d = (i == j) ? 1.0 : 0.0;
            const double xi = out.mean(2 * i), pi_ = out.mean(2 * i + 1);
            const double xj = out.mean(2 * j), pj = out.mean(2 * j + 1);
            out.cov(2 * i, 2 * j) = 2.0 * a.real() + 2.0 * b.real() + d - 2.0 * xi * xj;
            out.cov(2 * i + 1, 2 * j + 1) =
                -2.0 * a.real() + 2.0 * b.real() + d - 2.0 * pi_ * pj;
            out.cov(2 * i, 2 * j + 1) = 2.0 * a.imag() + 2.0 * b.imag() - 2.0 * xi * pj;
            out.cov(2 * i + 1, 2 * j) = 2.0 * a.imag() - 2.0 * b.imag() - 2.0 * pi_ * xj;
        }
    }
    out.cov = 0.5 * (out.cov + out.cov.transpose()).eval();
    return out;
}

CovarianceData moments(const PureStateVector& psi, const NumericsConfig& cfg) {
    guard_truncation(psi.layout(), 1.0 - psi.norm2(), cfg);
    // the surviving deficit is inside budget; renormalize so it cannot bias
    // the second moments
    return covariance_from_ladder(ladder_moments(psi.renormalized()));
}

CovarianceData moments(const DensityMatrix& rho, const NumericsConfig& cfg) {
    // a conditional branch carries its outcome probability as the trace; that
    // is not a truncation record, so normalize before judging the deficit
    const DensityMatrix work = rho.unnormalized() ? rho.normalized() : rho;
    guard_truncation(work.layout(), 1.0 - work.trace_real(), cfg);
    return covariance_from_ladder(ladder_moments(work.normalized()));
}

// ---------- symplectic spectrum ----------

SymplecticSpectrum symplectic_eigenvalues(const CovarianceData& cov) {
    const Eigen::MatrixXd& sigma = cov.cov;
    const int size = static_cast<int>(sigma.rows());
    if (size < 2 || size % 2 != 0 || sigma.cols() != size)
        throw InvalidArgument("symplectic_eigenvalues: covariance must be 2N x 2N");
    const double scale = std::max(1.0, sigma.cwiseAbs().maxCoeff());
    if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale)
        throw InvalidArgument("symplectic_eigenvalues: covariance not symmetric");
    const Eigen::MatrixXd sym = 0.5 * (sigma + sigma.transpose());

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
    if (es.info() != Eigen::Success)
        throw NumericalInconsistency("symplectic_eigenvalues: eigensolver failed");
    if (es.eigenvalues().minCoeff() < -1e-10 * scale)
        throw InvalidState("symplectic_eigenvalues: covariance not positive semidefinite");
    const Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    const Eigen::MatrixXd half = es.eigenvectors() * root.asDiagonal() *
                                 es.eigenvectors().transpose();

    // sigma^{1/2} Omega sigma^{1/2} is real antisymmetric, so i times it is
    // Hermitian with the spectrum {+/- nu_j} of i Omega sigma.
    const Eigen::MatrixXd core = half * symplectic_form(size / 2) * half;
    const Eigen::MatrixXcd herm = Complex(0.0, 1.0) * core;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eh(herm, Eigen::EigenvaluesOnly);
    if (eh.info() != Eigen::Success)
        throw NumericalInconsistency("symplectic_eigenvalues: eigensolver failed");

    SymplecticSpectrum spec;
    spec.eigenvalues.assign(eh.eigenvalues().data() + size / 2,
                            eh.eigenvalues().data() + size);
    for (double nu : spec.eigenvalues)
        if (nu < 1.0 - kNuTol)
            throw InvalidState("symplectic_eigenvalues: unphysical covariance, nu = " +
                               fmt(nu));
    return spec;
}

// ---------- entropies ----------

double entropy_h(double x) {
    if (x < 1.0 - kNuTol)
        throw InvalidArgument("entropy_h: argument " + fmt(x) + " below 1");
    if (x <= 1.0) return 0.0;
    const double up = 0.5 * (x + 1.0);
    const double dn = 0.5 * (x - 1.0);
    return up * std::log2(up) - (dn > 0.0 ? dn * std::log2(dn) : 0.0);
}

double delta_pure(const PureStateVector& psi, const NumericsConfig& cfg) {
    const SymplecticSpectrum spec = symplectic_eigenvalues(moments(psi, cfg));
    double total = 0.0;
    for (double nu : spec.eigenvalues) total += entropy_h(nu);
    return total;
}

double delta_cubic_closed(double u) { return entropy_h(std::sqrt(1.0 + 9.0 * u * u)); }

double delta_sub_closed(Complex alpha, double r) {
    const double a2 = std::norm(alpha);
    if (r == 0.0) {
        if (a2 == 0.0)
            throw UndefinedState(
                "delta_sub_closed: subtraction from vacuum has zero success probability");
        return 0.0;  // csch^2 diverges, the argument collapses to 1
    }
    const double s = std::sinh(r);
    const double base = a2 / (s * s) + 1.0;
    return entropy_h(std::sqrt(8.0 / (base * base * base) + 1.0));
}

double delta_add_closed(Complex alpha, double r) {
    const double c = std::cosh(r);
    const double base = std::norm(alpha) / (c * c) + 1.0;
    return entropy_h(std::sqrt(8.0 / (base * base * base) + 1.0));
}

// ---------- energy frontier ----------

namespace {

struct WlnEval {
    double value = 0.0;
    bool converged = false;
};

WlnEval wln_eval(const PureStateVector& psi, const NumericsConfig& cfg) {
    try {
        const NegativityReport rep = negativity_report(psi, cfg);
        return {rep.log_negativity, rep.converged};
    } catch (const ConvergenceFailure& e) {
        return {std::log2(1.0 + std::max(e.last_value, 0.0)), false};
    }
}

// Build with a dimension escalation loop; `dim` persists across calls so a
// sweep does not rediscover the workable size every time.
PureStateVector build_retrying(const std::function<PureStateVector(int)>& make, int& dim) {
    for (int attempt = 0; attempt < 24; ++attempt) {
        try {
            return make(dim);
        } catch (const TruncationOverflow& e) {
            int next = dim + 4;
            for (int d : e.suggested_dims) next = std::max(next, d);
            dim = next;
        }
    }
    throw ConvergenceFailure("energy_frontier: dimension escalation exhausted", 0.0, 0.0);
}

double occupation_of(const PureStateVector& psi) { return mode_occupation(psi)[0]; }

// Solve occupation(x) = target for x in (lo, inf), occupation increasing.
// Doubles the upper end from `hi0` until it brackets, then bisects.
double solve_occupation(const std::function<double(double)>& occupation, double lo,
                        double hi0, double target) {
    double hi = hi0;
    double flo = occupation(lo);
    if (flo >= target) return lo;
    double fhi = occupation(hi);
    int guard = 0;
    while (fhi < target) {
        hi *= 2.0;
        if (++guard > 60)
            throw ConvergenceFailure("energy_frontier: occupation bracket failed", flo, fhi);
        fhi = occupation(hi);
    }
    for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double f = occupation(mid);
        if (std::abs(f - target) <= 1e-9 * std::max(1.0, target)) return mid;
        (f < target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// Maximize fn on [a, b] by golden section; ties drift toward the left end.
double golden_max(const std::function<double(double)>& fn, double a, double b,
                  double tol) {
    double c = b - kGoldenRatio * (b - a);
    double d = a + kGoldenRatio * (b - a);
    double fc = fn(c), fd = fn(d);
    while (b - a > tol) {
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - kGoldenRatio * (b - a);
            fc = fn(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + kGoldenRatio * (b - a);
            fd = fn(d);
        }
    }
    return fc >= fd ? c : d;
}

FrontierPoint fock_point(double target, const NumericsConfig& cfg) {
    const int n = static_cast<int>(std::llround(target));
    FrontierPoint pt;
    pt.nbar = n;
    pt.params = "n=" + std::to_string(n);
    const WlnEval w = wln_eval(fock_state(n, n + 1), cfg);
    pt.wln = w.value;
    pt.converged = w.converged;
    return pt;
}

FrontierPoint addsub_point(double target, const WlnEval& one_photon,
                           const NumericsConfig& cfg) {
    FrontierPoint pt;
    pt.nbar = target;
    if (target >= 1.0) {
        pt.params = "E=1";
        pt.wln = one_photon.value;
        pt.converged = one_photon.converged;
        return pt;
    }
    pt.params = "E=" + fmt(target);
    Eigen::VectorXcd amp(2);
    amp << std::sqrt(1.0 - target), std::sqrt(target);
    const WlnEval w = wln_eval(PureStateVector(ModeLayout({2}), amp), cfg);
    pt.wln = w.value;
    pt.converged = w.converged;
    return pt;
}

// Fock amplitudes of the squeezed vacuum stretched along x; even levels only.
Eigen::VectorXd squeezed_amplitudes(double r, int dim) {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(dim);
    const double t = std::tanh(r);
    double cur = 1.0 / std::sqrt(std::cosh(r));
    c(0) = cur;
    for (int k = 1; 2 * k < dim; ++k) {
        cur *= t * std::sqrt((2.0 * k) * (2.0 * k - 1.0)) / (2.0 * k);
        c(2 * k) = cur;
    }
    return c;
}

// The cubic frontier search evaluates <n> of e^{i gamma x^3} S(r)|0> thousands
// of times at dimensions where a fresh dense matrix exponential per call is
// hopeless.  The gate generator is gamma times a fixed matrix, so one
// eigendecomposition of x^3 per dimension (cached) turns every application
// into two real matvecs; the result is numerically identical to the
// general-purpose builder and still lives in the truncated Fock space.
struct CubicEngine {
    NumericsConfig cfg;
    std::map<int, std::pair<Eigen::MatrixXd, Eigen::VectorXd>> gates;

    explicit CubicEngine(const NumericsConfig& c) : cfg(c) {}

    const std::pair<Eigen::MatrixXd, Eigen::VectorXd>& gate(int padded) {
        auto it = gates.find(padded);
        if (it == gates.end()) {
            // x is tridiagonal in the Fock basis, so its spectrum is cheap, and
            // the matrix cube shares the eigenvectors with cubed eigenvalues
            Eigen::VectorXd diag = Eigen::VectorXd::Zero(padded);
            Eigen::VectorXd sub(padded - 1);
            for (int n = 0; n + 1 < padded; ++n) sub(n) = std::sqrt(0.5 * (n + 1));
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
            es.computeFromTridiagonal(diag, sub);
            if (es.info() != Eigen::Success)
                throw NumericalInconsistency("energy_frontier: cubic gate eigensolver failed");
            it = gates.emplace(padded,
                               std::pair{es.eigenvectors(),
                                         es.eigenvalues().array().cube().matrix().eval()})
                     .first;
        }
        return it->second;
    }

    long calls = 0;
    double spent = 0.0;

    // normalized amplitudes, sized per call so one wide probe cannot tax the
    // narrow ones that follow
    Eigen::VectorXcd amplitudes(double gamma, double r) {
        const auto tick = std::chrono::steady_clock::now();
        struct Probe {
            CubicEngine* self;
            std::chrono::steady_clock::time_point t0;
            ~Probe() {
                self->spent +=
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                        .count();
                if (++self->calls % 200 == 0 && std::getenv("WIGNEG_FRONTIER_LOG"))
                    std::fprintf(stderr, "[eng] %ld calls, %.3f ms avg\n", self->calls,
                                 1e3 * self->spent / self->calls);
            }
        } probe{this, tick};
        // Fock support of the gated squeezed state, measured against an
        // independent position-representation integration, is close to
        // 420 (u/0.55)^1.9 e^{-2r} levels at u = gamma e^{3r} for a 1e-8 tail.
        // Snapping the seed to the 1.5x ladder keeps the eigenvector cache to a
        // dozen entries; the loop re-runs whenever the actual tail disagrees.
        const double u = gamma * std::exp(3.0 * r);
        const double predicted =
            40.0 + 420.0 * std::pow(u / 0.55, 1.9) * std::exp(-2.0 * r);
        int d = 48;
        while (d < predicted && d < 4096) d += d / 2;
        for (;;) {
            const int padded = d + std::max(8, d / 8);
            const auto& [vecs, vals] = gate(padded);
            Eigen::VectorXcd w = (vecs.transpose() * squeezed_amplitudes(r, padded))
                                     .cast<Complex>();
            for (int i = 0; i < padded; ++i) w(i) *= std::polar(1.0, gamma * vals(i));
            const Eigen::VectorXd re = vecs * w.real();
            const Eigen::VectorXd im = vecs * w.imag();
            Eigen::VectorXcd full(padded);
            for (int i = 0; i < padded; ++i) full(i) = Complex(re(i), im(i));
            const double tail = full.tail(padded - d).squaredNorm();
            if (tail <= cfg.eps_trunc) {
                Eigen::VectorXcd out = full.head(d);
                return out / out.norm();
            }
            if (d >= 4096)
                throw ConvergenceFailure("energy_frontier: cubic truncation exceeds budget",
                                         tail, cfg.eps_trunc);
            if (std::getenv("WIGNEG_FRONTIER_LOG"))
                std::fprintf(stderr, "[esc] g=%.6f r=%.6f d=%d tail=%.3e\n", gamma, r, d,
                             tail);
            d += d / 2;
        }
    }

    double nbar(double gamma, double r) {
        const Eigen::VectorXcd amp = amplitudes(gamma, r);
        double total = 0.0;
        for (int n = 1; n < amp.size(); ++n) total += n * std::norm(amp(n));
        return total;
    }
};

FrontierPoint cubic_point(double target, CubicEngine& engine, const NumericsConfig& cfg) {
    FrontierPoint pt;
    pt.nbar = target;
    const auto gamma_for = [&](double r) {
        // sinh^2 r of the squeezing alone stays below the target on the search
        // interval and the gate only adds energy, so a bracket always opens.
        // Blind doubling is poison here: the Fock support grows like a power of
        // gamma, so the bracket is steered by the quadratic energy growth in
        // gamma to keep the probes near the root's own dimensions.
        const double base = engine.nbar(0.0, r);
        // the gate adds energy roughly as (27/8) gamma^2 e^{4r}; seeding the
        // bracket just above the root this predicts keeps every probe near the
        // dimensions the root itself needs (a flat seed at large r would probe
        // states hundreds of Fock levels wider than the answer)
        const double excess = std::max(target - base, 0.0);
        double g1 = std::max(1.2 * std::sqrt(excess * 8.0 / 27.0) * std::exp(-2.0 * r),
                             1e-8);
        double f1 = engine.nbar(g1, r);
        int guard = 0;
        while (f1 < target) {
            const double k = std::max((f1 - base) / (g1 * g1), 1e-12);
            const double jump = std::sqrt(std::max(target - base, 0.0) / k);
            g1 = std::min(2.0 * g1, std::max(1.05 * g1, 1.1 * jump));
            f1 = engine.nbar(g1, r);
            if (++guard > 60)
                throw ConvergenceFailure("energy_frontier: cubic bracket failed", f1, target);
        }
        double lo = 0.0, hi = g1;
        for (int it = 0; it < 80; ++it) {
            const double mid = 0.5 * (lo + hi);
            const double f = engine.nbar(mid, r);
            if (std::abs(f - target) <= 1e-9 * std::max(1.0, target)) return mid;
            (f < target ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    };
    const auto strength = [&](double r) { return std::exp(3.0 * r) * gamma_for(r); };

    const double r_max = std::asinh(std::sqrt(target)) * (1.0 - 1e-6);
    const double r_lo = 1e-3;
    // log-spaced bracket grid, then golden section inside the best bracket
    const int grid_n = 15;
    std::vector<double> rs(grid_n);
    std::vector<double> us(grid_n);
    int best = 0;
    for (int k = 0; k < grid_n; ++k) {
        rs[k] = r_lo * std::pow(r_max / r_lo, k / double(grid_n - 1));
        us[k] = strength(rs[k]);
        if (us[k] > us[best]) best = k;
    }
    const double lo = rs[std::max(0, best - 1)];
    const double hi = rs[std::min(grid_n - 1, best + 1)];
    const double r_star = golden_max(strength, lo, hi, 1e-3 * r_max);
    const double gamma_star = gamma_for(r_star);

    pt.params = "gamma=" + fmt(gamma_star) + ";r=" + fmt(r_star);
    const Eigen::VectorXcd amp = engine.amplitudes(gamma_star, r_star);
    const WlnEval w =
        wln_eval(PureStateVector(ModeLayout({static_cast<int>(amp.size())}), amp), cfg);
    pt.wln = w.value;
    pt.converged = w.converged;
    return pt;
}

FrontierPoint cat_point(double target, const NumericsConfig& cfg) {
    FrontierPoint pt;
    pt.nbar = target;
    const double phi = 0.25 * kPiVal;
    int dim = 16;
    const auto make = [&](double alpha, double theta) {
        return build_retrying([&](int d) { return cat_state(alpha, phi, theta, d, cfg); },
                              dim);
    };
    const auto alpha_for = [&](double theta, double floor) {
        return solve_occupation([&](double a) { return occupation_of(make(a, theta)); },
                                floor, 1.0, target);
    };

    double theta, alpha;
    if (target >= 1.0) {
        theta = kPiVal;  // the odd branch covers <n> >= 1 and maximizes wln there
        alpha = alpha_for(theta, kCatAlphaOdd);
    } else {
        const auto score = [&](double th) {
            return wln_eval(make(alpha_for(th, kCatAlphaTiny), th), cfg).value;
        };
        const int grid_n = 7;
        const double th_hi = kPiVal * (1.0 - 1e-3);
        std::vector<double> ths(grid_n);
        int best = 0;
        std::vector<double> ws(grid_n);
        for (int k = 0; k < grid_n; ++k) {
            ths[k] = th_hi * (k + 1) / double(grid_n);
            ws[k] = score(ths[k]);
            if (ws[k] > ws[best]) best = k;
        }
        theta = golden_max(score, ths[std::max(0, best - 1)],
                           ths[std::min(grid_n - 1, best + 1)], 0.02);
        alpha = alpha_for(theta, kCatAlphaTiny);
    }

    pt.params = "alpha=" + fmt(alpha) + ";theta=" + fmt(theta);
    const WlnEval w = wln_eval(make(alpha, theta), cfg);
    pt.wln = w.value;
    pt.converged = w.converged;
    return pt;
}

}  // namespace

std::vector<FrontierPoint> energy_frontier(FrontierFamily family,
                                           const std::vector<double>& nbar_grid,
                                           const NumericsConfig& cfg) {
    for (double nbar : nbar_grid)
        if (!(nbar > 0.0))
            throw InvalidArgument("energy_frontier: mean photon numbers must be positive");

    WlnEval one_photon;
    if (family == FrontierFamily::addsub) {
        bool need = false;
        for (double nbar : nbar_grid) need = need || nbar >= 1.0;
        if (need) one_photon = wln_eval(fock_state(1, 2), cfg);
    }
    CubicEngine engine(cfg);  // gate decompositions shared across the grid

    std::vector<FrontierPoint> curve;
    curve.reserve(nbar_grid.size());
    for (double target : nbar_grid) {
        if (family == FrontierFamily::fock &&
            std::abs(target - std::llround(target)) > 1e-6)
            continue;  // the fock curve only has lattice points
        try {
            switch (family) {
                case FrontierFamily::fock: curve.push_back(fock_point(target, cfg)); break;
                case FrontierFamily::cubic:
                    curve.push_back(cubic_point(target, engine, cfg));
                    break;
                case FrontierFamily::addsub:
                    curve.push_back(addsub_point(target, one_photon, cfg));
                    break;
                case FrontierFamily::cat: curve.push_back(cat_point(target, cfg)); break;
            }
        } catch (const Error&) {
            FrontierPoint failed;
            failed.nbar = target;
            failed.converged = false;
            curve.push_back(failed);
        }
    }
    return curve;
}

}  // namespace wigneg
