#include "wigneg/phase_space.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cmath>
#include <functional>
#include <limits>
#include <utility>

#include <Eigen/Dense>

#include "wigneg/errors.hpp"
#include "wigneg/special_functions.hpp"

namespace wigneg {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kImagResidueTol = 1e-10;
constexpr double kNegativityScaleFloor = 1e-2;  // relative tolerance floor for near-positive states
constexpr double kTraceSlack = 50.0;            // allowed |quadrature trace - 1| in units of tol_int
constexpr int kNodesOneMode = 150;
constexpr int kNodesTwoMode = 90;
constexpr long kMaxMaterialized = 1L << 24;
constexpr double kTwoModeTolFloor = 1e-4;  // kinked 4-d tensor quadrature settles slower
// Lobes under kPinFrac * peak are still cut and integrated inside each line,
// but are not worth a pinned outer edge of their own.
constexpr double kPinFrac = 1e-5;
constexpr long kMaxOuterEvals = 30000;

// ---------- grids ----------

PhaseGrid grid_from_moments(const LadderMoments& mom, int modes, int nodes_per_axis) {
    std::vector<double> half_widths;
    std::vector<int> node_counts;
    half_widths.reserve(2 * modes);
    node_counts.reserve(2 * modes);
    for (int i = 0; i < modes; ++i) {
        const double xbar = std::sqrt(2.0) * mom.mean_a(i).real();
        const double pbar = std::sqrt(2.0) * mom.mean_a(i).imag();
        const double re_aa = mom.aa(i, i).real();
        const double re_ba = mom.adag_a(i, i).real();
        const double im_sum = mom.aa(i, i).imag() + mom.adag_a(i, i).imag();
        double sxx = 2.0 * re_aa + 2.0 * re_ba + 1.0 - 2.0 * xbar * xbar;
        double spp = -2.0 * re_aa + 2.0 * re_ba + 1.0 - 2.0 * pbar * pbar;
        double sxp = 2.0 * im_sum - 2.0 * xbar * pbar;
        sxx = std::max(sxx, 1e-6);
        spp = std::max(spp, 1e-6);
        const double nu = std::sqrt(std::max(sxx * spp - sxp * sxp, 1.0));
        const double n_eff = std::max(0.0, 0.5 * (nu - 1.0));
        const double base = std::max(6.0, 4.0 * std::sqrt(2.0 * n_eff + 1.0));
        half_widths.push_back(base * std::sqrt(sxx / nu) + std::abs(xbar));
        half_widths.push_back(base * std::sqrt(spp / nu) + std::abs(pbar));
        node_counts.push_back(nodes_per_axis);
        node_counts.push_back(nodes_per_axis);
    }
    return PhaseGrid::symmetric(std::move(half_widths), std::move(node_counts));
}

// How far a marginal reaches before all but `budget` of its mass is shed,
// scanned from the outside in.  Covariance boxes miss states whose local
// frequency grows with position: their W support in p has a sub-Gaussian tail
// that no second moment can see, while the momentum marginal sees it directly.
double marginal_reach(const std::function<double(double)>& density, double limit,
                      double budget) {
    const int steps = 800;
    const double h = limit / steps;
    double shed = 0.0;
    for (int k = 0; k < steps; ++k) {
        const double t = limit - (k + 0.5) * h;
        shed += h * (density(t) + density(-t));
        if (shed > budget) return std::min(limit, t + 2.0 * h + 2.0);
    }
    return 0.0;
}

// Widen a covariance-sized one-mode box until both marginals fit.  The box
// only ever grows; the sliver left outside scales as tol^2 because the rim of
// |W| integrates like the square root of the marginal mass feeding it.
void widen_by_marginals(std::vector<double>& half_widths, int dim,
                        const std::function<double(const std::vector<double>&)>& x_density,
                        const std::function<double(const std::vector<double>&)>& p_density,
                        double tol) {
    const double limit = std::sqrt(2.0 * dim - 1.0) + 8.0;
    const double budget = std::clamp(tol * tol, 1e-14, 1e-8);
    std::vector<double> eig;
    const auto reach = [&](const std::function<double(const std::vector<double>&)>& den) {
        return marginal_reach(
            [&](double t) {
                oscillator_eigenfunctions(t, dim, eig);
                return den(eig);
            },
            limit, budget);
    };
    half_widths[0] = std::max(half_widths[0], reach(x_density));
    half_widths[1] = std::max(half_widths[1], reach(p_density));
}

void check_mode_count(int modes) {
    if (modes < 1 || modes > 2)
        throw InvalidArgument("phase-space evaluation supports one or two modes, got " +
                              std::to_string(modes));
}

// Gauss-7 / Kronrod-15 pair on [-1, 1].
constexpr double kK15Nodes[8] = {0.991455371120813, 0.949107912342759, 0.864864423359769,
                                 0.741531185599394, 0.586087235467691, 0.405845151377397,
                                 0.207784955007898, 0.0};
constexpr double kK15Weights[8] = {0.022935322010529, 0.063092092629979, 0.104790010322250,
                                   0.140653259715525, 0.169004726639267, 0.190350578064785,
                                   0.204432940075298, 0.209482141084728};
constexpr double kG7Weights[4] = {0.129484966168870, 0.279705391489277, 0.381830050505119,
                                  0.417959183673469};

// Adaptive Gauss-Kronrod over a set of initial segments, worklist style: the
// segment with the largest error estimate is split until the estimated total
// meets the budget.  The outer integrand carries square-root derivative
// blow-ups wherever a lobe is born or dies; the K15-G7 difference alone
// underestimates such errors badly, so it is inflated against the integrand's
// own variation the way QUADPACK does.
template <class F>
double adaptive_outer(F&& f, const std::vector<double>& edges, double tol_abs, long* evals) {
    struct Span {
        double a, b, kron, err;
        int depth;
    };
    const auto rate = [&](double a, double b, int depth) -> Span {
        const double mid = 0.5 * (a + b);
        const double half = 0.5 * (b - a);
        double vals[15];  // ascending by abscissa; kK15Nodes[q] maps to 14-q / q
        for (int q = 0; q < 8; ++q) {
            const double off = half * kK15Nodes[q];
            vals[14 - q] = f(mid + off);
            if (q != 7) vals[q] = f(mid - off);
            *evals += (q != 7) ? 2 : 1;
        }
        double kron = 0.0;
        double gauss = 0.0;
        for (int q = 0; q < 8; ++q) {
            const double v = (q != 7) ? vals[14 - q] + vals[q] : vals[7];
            kron += kK15Weights[q] * v;
            if (q % 2 == 1) gauss += kG7Weights[q / 2] * v;
        }
        kron *= half;
        gauss *= half;
        const double mean = kron / (b - a);
        double resasc = 0.0;
        for (int q = 0; q < 8; ++q) {
            resasc += kK15Weights[q] * std::abs(vals[14 - q] - mean);
            if (q != 7) resasc += kK15Weights[q] * std::abs(vals[q] - mean);
        }
        resasc *= half;
        double err = std::abs(kron - gauss);
        if (resasc > 0.0 && err > 0.0)
            err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
        return {a, b, kron, err, depth};
    };

    std::vector<Span> spans;
    for (size_t s = 0; s + 1 < edges.size(); ++s)
        if (edges[s + 1] > edges[s]) spans.push_back(rate(edges[s], edges[s + 1], 0));
    while (*evals <= kMaxOuterEvals) {
        double err_total = 0.0;
        size_t worst = spans.size();
        for (size_t s = 0; s < spans.size(); ++s) {
            err_total += spans[s].err;
            if (spans[s].depth < 30 &&
                (worst == spans.size() || spans[s].err > spans[worst].err))
                worst = s;
        }
        if (err_total <= tol_abs || worst == spans.size() || spans[worst].err == 0.0) break;
        const Span split = spans[worst];
        const double mid = 0.5 * (split.a + split.b);
        spans[worst] = rate(split.a, mid, split.depth + 1);
        spans.push_back(rate(mid, split.b, split.depth + 1));
    }
    std::sort(spans.begin(), spans.end(), [](const Span& l, const Span& r) { return l.a < r.a; });
    std::vector<double> terms;
    terms.reserve(spans.size());
    for (const Span& s : spans) terms.push_back(s.kron);
    return pairwise_sum(terms);
}

// ---------- Fock dyad kernels ----------

// g_m^{(k)}(u) = sqrt(m!/(m+k)!) u^{k/2} L_m^{(k)}(u) e^{-u/2} for m = 0..count-1.
// Every value is bounded by 1, so high indices and far-out points cannot overflow.
void weighted_laguerre_column(int k, double u, int count, std::vector<double>& out) {
    out.resize(static_cast<size_t>(std::max(count, 0)));
    if (count <= 0) return;
    double g0;
    if (k == 0)
        g0 = std::exp(-0.5 * u);
    else if (u <= 0.0)
        g0 = 0.0;
    else
        g0 = std::exp(0.5 * (k * std::log(u) - std::lgamma(static_cast<double>(k) + 1.0)) -
                      0.5 * u);
    out[0] = g0;
    double prev = 0.0;
    double cur = g0;
    for (int m = 0; m + 1 < count; ++m) {
        const double denom = std::sqrt(static_cast<double>(m + 1) * (m + k + 1));
        const double next =
            ((2.0 * m + k + 1.0 - u) * cur - std::sqrt(static_cast<double>(m) * (m + k)) * prev) /
            denom;
        prev = cur;
        cur = next;
        out[static_cast<size_t>(m) + 1] = next;
    }
}

// All dyad kernels of one mode at one point, row-major (n * dim + m).
void dyad_kernels_at(int dim, double x, double p, std::vector<Complex>& out,
                     std::vector<double>& scratch) {
    out.resize(static_cast<size_t>(dim) * dim);
    const double u = 2.0 * (x * x + p * p);
    const double phi = std::atan2(p, x);
    for (int k = 0; k < dim; ++k) {
        weighted_laguerre_column(k, u, dim - k, scratch);
        const Complex rot = std::polar(1.0, -k * phi);
        double sign = 1.0;
        for (int m = 0; m + k < dim; ++m) {
            const int n = m + k;
            const Complex val = (sign / kPi) * scratch[static_cast<size_t>(m)] * rot;
            out[static_cast<size_t>(n) * dim + m] = val;
            if (k > 0) out[static_cast<size_t>(m) * dim + n] = std::conj(val);
            sign = -sign;
        }
    }
}

// W at one point for a one-mode density matrix, using Hermitian pairing.
double wigner_point(const Eigen::MatrixXcd& rho, double x, double p,
                    std::vector<double>& scratch) {
    const int dim = static_cast<int>(rho.rows());
    const double u = 2.0 * (x * x + p * p);
    const double phi = std::atan2(p, x);
    double acc = 0.0;
    for (int k = 0; k < dim; ++k) {
        weighted_laguerre_column(k, u, dim - k, scratch);
        double sign = 1.0;
        if (k == 0) {
            double s = 0.0;
            for (int m = 0; m < dim; ++m) {
                s += sign * rho(m, m).real() * scratch[static_cast<size_t>(m)];
                sign = -sign;
            }
            acc += s;
        } else {
            const double c = std::cos(k * phi);
            const double si = -std::sin(k * phi);
            double t = 0.0;
            for (int m = 0; m + k < dim; ++m) {
                const int n = m + k;
                const double g = sign * scratch[static_cast<size_t>(m)];
                t += rho(n, m).real() * (g * c) - rho(n, m).imag() * (g * si);
                sign = -sign;
            }
            acc += 2.0 * t;
        }
    }
    return acc / kPi;
}

void check_imag_residue(const Eigen::MatrixXcd& rho) {
    const double bound = (rho - rho.adjoint()).cwiseAbs().sum() / (2.0 * kPi);
    if (bound > kImagResidueTol)
        throw NumericalInconsistency(
            "discarded imaginary Wigner mass bound " + std::to_string(bound) +
            " exceeds tolerance; operator is not Hermitian enough");
}

// ---------- transform line engines ----------
//
// Both engines expose W(x_fixed, .) through the quadrature-domain transform
// W(x, p) = (1/pi) Integral <x+y| rho |x-y> e^{-2ipy} dy.  Once the y-data of
// a line is cached, any p costs one short oscillatory sum, which lets the
// absolute integral chase sign changes without touching the state again.

struct LineTransform {
    QuadratureRule yrule;
    Eigen::VectorXcd f;  // y-weighted coherence values of the current line
    int jlo = 0, jhi = -1;  // y-window actually carrying weight on this line
    int scan_count = 0;     // uniform scan grid over [-half_p, half_p]
    double scan_lo = 0.0;
    double scan_dp = 0.0;

    void prepare(double half_x, double half_p, int p_nodes, int dim) {
        // the coherence <x+y|rho|x-y> dies once either argument leaves the
        // truncated oscillator support, so the y window can stop there; the
        // rule then only has to track the transform phase (bandwidth
        // 2*half_p*R) plus the polynomial degree of the amplitudes
        const double support = std::sqrt(2.0 * dim - 1.0) + 6.0;
        const double half_y = std::min(half_x, support);
        const int ny = std::max(128, static_cast<int>(std::ceil(2.2 * half_p * half_y)) +
                                         dim + 64);
        yrule = gauss_legendre(ny, -half_y, half_y);
        f.resize(ny);
        // 3.5 samples per half-wave of the fastest transform component, enough
        // for a sample bracket to pin every sign change and for a degree-7
        // stencil through the samples to place the root itself
        scan_count = std::max({301, static_cast<int>(std::ceil(14.0 * half_p * half_y / kPi)),
                               2 * p_nodes}) |
                     1;
        scan_lo = -half_p;
        scan_dp = 2.0 * half_p / static_cast<double>(scan_count - 1);
    }

    // called after f is filled: trims y nodes whose coherence cannot move any
    // downstream sum at working precision
    void finalize() {
        const int ny = static_cast<int>(f.size());
        double fmax = 0.0;
        for (int j = 0; j < ny; ++j) fmax = std::max(fmax, std::abs(f(j)));
        const double floor = 1e-16 * fmax;
        jlo = 0;
        jhi = ny - 1;
        while (jlo < ny && std::abs(f(jlo)) < floor) ++jlo;
        while (jhi >= jlo && std::abs(f(jhi)) < floor) --jhi;
    }

    double at(double p) const {
        double acc = 0.0;
        for (int j = jlo; j <= jhi; ++j) {
            double sn, cs;
            ::sincos(2.0 * p * yrule.nodes[j], &sn, &cs);
            acc += f(j).real() * cs + f(j).imag() * sn;
        }
        return acc / kPi;
    }

    // W along the whole line on the uniform scan grid by phase recurrence: two
    // trig evaluations per y node for the entire row, multiplications after.
    // Four independent rotation chains hide the complex-multiply latency.
    void dense_scan(std::vector<double>& out) const {
        out.assign(static_cast<size_t>(scan_count), 0.0);
        double* o = out.data();
        for (int j = jlo; j <= jhi; ++j) {
            const double y = yrule.nodes[j];
            const Complex s1 = std::polar(1.0, -2.0 * scan_dp * y);
            const Complex s4 = (s1 * s1) * (s1 * s1);
            Complex z0 = f(j) * std::polar(1.0, -2.0 * scan_lo * y);
            Complex z1 = z0 * s1;
            Complex z2 = z1 * s1;
            Complex z3 = z2 * s1;
            int k = 0;
            for (; k + 3 < scan_count; k += 4) {
                o[k] += z0.real();
                o[k + 1] += z1.real();
                o[k + 2] += z2.real();
                o[k + 3] += z3.real();
                z0 *= s4;
                z1 *= s4;
                z2 *= s4;
                z3 *= s4;
            }
            if (k < scan_count) o[k] += z0.real();
            if (k + 1 < scan_count) o[k + 1] += z1.real();
            if (k + 2 < scan_count) o[k + 2] += z2.real();
        }
        const double inv_pi = 1.0 / kPi;
        for (double& v : out) v *= inv_pi;
    }

    // real part of the primitive of the line: the transform is a finite
    // exponential sum, so segment integrals of W between sign changes are
    // exact antiderivative differences, no lobe quadrature needed
    double antiderivative(double p) const {
        double acc = 0.0;
        for (int j = jlo; j <= jhi; ++j) {
            const double y = yrule.nodes[j];
            if (std::abs(y) < 1e-12) {
                acc += f(j).real() * p;
                continue;
            }
            double sn, cs;
            ::sincos(2.0 * p * y, &sn, &cs);
            acc += (f(j).real() * sn - f(j).imag() * cs) / (2.0 * y);
        }
        return acc;
    }
};

// Root of the degree-7 polynomial through the eight scan samples around a
// bracketed sign change, in global p coordinates.  At 3.5 samples per
// half-wave the stencil places the zero to ~1e-5 sample spacings, which mixes
// less signed mass across the cut than the integration tolerance by orders of
// magnitude, without ever touching the transform again.
double stencil_root(const std::vector<double>& scan, int k, double lo, double dp, int count) {
    const int s = std::clamp(k - 3, 0, count - 8);
    double c[8];
    for (int i = 0; i < 8; ++i) c[i] = scan[static_cast<size_t>(s + i)];
    for (int ord = 1; ord < 8; ++ord)
        for (int i = 7; i >= ord; --i) c[i] = (c[i] - c[i - 1]) / static_cast<double>(ord);
    const auto eval = [&](double t) {
        double v = c[7];
        for (int i = 6; i >= 0; --i) v = v * (t - static_cast<double>(i)) + c[i];
        return v;
    };
    double a = static_cast<double>(k - s);
    double b = a + 1.0;
    double fa = scan[static_cast<size_t>(k)];
    for (int it = 0; it < 48 && b - a > 1e-12; ++it) {
        const double m = 0.5 * (a + b);
        const double fm = eval(m);
        if (fm == 0.0) return lo + (static_cast<double>(s) + m) * dp;
        if ((fa > 0.0) == (fm > 0.0)) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    return lo + (static_cast<double>(s) + 0.5 * (a + b)) * dp;
}

struct PureLineContext {
    LineTransform line;
    const Eigen::VectorXcd* amps = nullptr;
    std::vector<double> eig;

    void prepare(const Eigen::VectorXcd& amplitudes, double half_x, double half_p,
                 int p_nodes) {
        amps = &amplitudes;
        line.prepare(half_x, half_p, p_nodes, static_cast<int>(amplitudes.size()));
    }

    Complex wavefunction(double t) {
        oscillator_eigenfunctions(t, static_cast<int>(amps->size()), eig);
        Complex s = 0.0;
        for (int n = 0; n < amps->size(); ++n) s += (*amps)(n)*eig[static_cast<size_t>(n)];
        return s;
    }

    void set_x(double x) {
        const int ny = static_cast<int>(line.yrule.nodes.size());
        for (int j = 0; j < ny; ++j) {
            const Complex plus = wavefunction(x + line.yrule.nodes[j]);
            const Complex minus = wavefunction(x - line.yrule.nodes[j]);
            line.f(j) = line.yrule.weights[j] * plus * std::conj(minus);
        }
        line.finalize();
    }
};

struct DmLineContext {
    LineTransform line;
    Eigen::MatrixXd rho_re, rho_im;
    Eigen::MatrixXd basis_plus, basis_minus;  // oscillator eigenfunctions at x +- y_j
    Eigen::MatrixXd coh_re, coh_im;
    std::vector<double> eig;
    int dim = 0;

    void prepare(const Eigen::MatrixXcd& rho, double half_x, double half_p, int p_nodes) {
        dim = static_cast<int>(rho.rows());
        rho_re = rho.real();
        rho_im = rho.imag();
        line.prepare(half_x, half_p, p_nodes, dim);
        const int ny = static_cast<int>(line.yrule.nodes.size());
        basis_plus.resize(ny, dim);
        basis_minus.resize(ny, dim);
    }

    void set_x(double x) {
        const int ny = static_cast<int>(line.yrule.nodes.size());
        for (int j = 0; j < ny; ++j) {
            oscillator_eigenfunctions(x + line.yrule.nodes[j], dim, eig);
            for (int n = 0; n < dim; ++n) basis_plus(j, n) = eig[static_cast<size_t>(n)];
            oscillator_eigenfunctions(x - line.yrule.nodes[j], dim, eig);
            for (int n = 0; n < dim; ++n) basis_minus(j, n) = eig[static_cast<size_t>(n)];
        }
        // <x+y|rho|x-y> = row_plus . rho . row_minus^T, done as two real products
        coh_re.noalias() = basis_minus * rho_re.transpose();
        coh_im.noalias() = basis_minus * rho_im.transpose();
        for (int j = 0; j < ny; ++j) {
            const double re = basis_plus.row(j).dot(coh_re.row(j));
            const double im = basis_plus.row(j).dot(coh_im.row(j));
            line.f(j) = line.yrule.weights[j] * Complex(re, im);
        }
        line.finalize();
    }
};

// ---------- absolute-integral pass ----------

struct PassResult {
    double abs_integral = 0.0;
    double signed_integral = 0.0;
};

int sign_change_count(const std::vector<double>& vals, double noise_floor) {
    int count = 0;
    for (size_t k = 0; k + 1 < vals.size(); ++k)
        if (vals[k] * vals[k + 1] < 0.0 &&
            std::max(std::abs(vals[k]), std::abs(vals[k + 1])) > noise_floor)
            ++count;
    return count;
}

// Integral of |W| along one p-line.  Sign changes are bracketed on the dense
// scan and placed by the local sample stencil, and the integral between
// consecutive cuts is the exact primitive difference of the exponential sum,
// so no lobe needs a quadrature rule of its own.  The crossing floor is
// relative to this line's own peak: that keeps the result a smooth function
// of x at every amplitude scale, which the outer worklist needs, while still
// ignoring crossings that are pure roundoff of the transform sum.
double line_abs_integral(const LineTransform& line, double half_p, double floor,
                         std::vector<double>& scan, std::vector<double>& cuts,
                         std::vector<double>& terms) {
    line.dense_scan(scan);
    double line_peak = 0.0;
    for (const double v : scan) line_peak = std::max(line_peak, std::abs(v));
    const double noise = std::max(1e-12 * line_peak, 1e-300);
    cuts.clear();
    cuts.push_back(-half_p);
    for (int k = 0; k + 1 < line.scan_count; ++k) {
        const double a = scan[static_cast<size_t>(k)];
        const double b = scan[static_cast<size_t>(k) + 1];
        if (!(a * b < 0.0)) continue;
        if (std::max(std::abs(a), std::abs(b)) <= noise) continue;
        cuts.push_back(stencil_root(scan, k, line.scan_lo, line.scan_dp, line.scan_count));
    }
    cuts.push_back(half_p);
    terms.clear();
    double prev = line.antiderivative(cuts.front());
    for (size_t s = 1; s < cuts.size(); ++s) {
        const double width = cuts[s] - cuts[s - 1];
        if (!(width > 0.0)) continue;
        const double next = line.antiderivative(cuts[s]);
        const double seg = (next - prev) / kPi;
        prev = next;
        const double av = std::abs(seg);
        terms.push_back(av < floor * width ? 0.0 : av);
    }
    return pairwise_sum(terms);
}

// Nested pass: exact-in-p lobe integration along lines, adaptive in x with the
// lobe birth/death abscissas seeding the subdivision.
template <class Ctx>
PassResult nested_abs_pass(Ctx& ctx, const std::vector<double>& half_widths,
                           const std::vector<int>& nodes, double tol,
                           const NumericsConfig& cfg) {
    const auto wall = [] {
        return std::chrono::duration<double>(
                   std::chrono::steady_clock::now().time_since_epoch())
            .count();
    };
    const double t0 = wall();
    const double half_x = half_widths[0];
    const double half_p = half_widths[1];
    const QuadratureRule xrule = gauss_legendre(nodes[0], -half_x, half_x);

    // seed lines: trace terms, a crude scale estimate, and sign-change
    // topology.  The per-line signed integral is the exact antiderivative
    // difference across the p window, so the trace check only has to resolve
    // the smooth position marginal in x, which the seed rule does to near
    // machine precision no matter how fine the p oscillation is.
    const size_t nx = xrule.nodes.size();
    std::vector<std::vector<double>> seed_scans(nx);
    std::vector<double> signed_terms(nx), abs_seed_terms(nx);
    double peak = 0.0;
    for (size_t i = 0; i < nx; ++i) {
        ctx.set_x(xrule.nodes[i]);
        signed_terms[i] = xrule.weights[i] *
                          (ctx.line.antiderivative(half_p) - ctx.line.antiderivative(-half_p)) /
                          kPi;
        ctx.line.dense_scan(seed_scans[i]);
        double row_abs = 0.0;
        for (const double v : seed_scans[i]) {
            peak = std::max(peak, std::abs(v));
            row_abs += std::abs(v);
        }
        row_abs -= 0.5 * (std::abs(seed_scans[i].front()) + std::abs(seed_scans[i].back()));
        abs_seed_terms[i] = xrule.weights[i] * row_abs * ctx.line.scan_dp;
    }
    // Only lobes that carry visible mass get their births and deaths pinned as
    // outer interval endpoints; the faint ripple lobes of high-dimensional
    // states are still cut and integrated exactly inside each line, but their
    // tangencies are cheap enough for the outer worklist to resolve unaided.
    const double pin_floor = std::max(kPinFrac * peak, 1e-280);
    std::vector<int> topology(nx);
    for (size_t i = 0; i < nx; ++i) topology[i] = sign_change_count(seed_scans[i], pin_floor);

    // where the lobe count changes a tangency sits between the two seed
    // lines; pinning it down lets the outer rule see the kink at an interval
    // endpoint instead of hiding inside one.  The seeded count alone flips
    // one seed spacing early (a shrinking lobe drops below the grid before it
    // actually dies), so when a lobe pair vanishes the edge is refined on the
    // sign of the dying lobe's peak, which is grid-independent.
    std::vector<double> probe_row;
    const auto lobe_count_at = [&](double x) {
        ctx.set_x(x);
        ctx.line.dense_scan(probe_row);
        return sign_change_count(probe_row, pin_floor);
    };
    const double seed_dp = ctx.line.scan_dp;
    const auto refined_edge = [&](size_t i) {
        const double xa = xrule.nodes[i];
        const double xb = xrule.nodes[i + 1];
        const int ca = topology[i];
        const int cb = topology[i + 1];
        if (std::abs(ca - cb) >= 2) {
            // locate the dying lobe on the richer line: the narrowest bracket
            ctx.set_x(ca > cb ? xa : xb);
            ctx.line.dense_scan(probe_row);
            std::vector<double> brackets;
            for (size_t k = 0; k + 1 < probe_row.size(); ++k)
                if (probe_row[k] * probe_row[k + 1] < 0.0 &&
                    std::max(std::abs(probe_row[k]), std::abs(probe_row[k + 1])) > pin_floor)
                    brackets.push_back(ctx.line.scan_lo +
                                       (static_cast<double>(k) + 0.5) * ctx.line.scan_dp);
            if (brackets.size() >= 2) {
                size_t best = 0;
                for (size_t k = 0; k + 1 < brackets.size(); ++k)
                    if (brackets[k + 1] - brackets[k] < brackets[best + 1] - brackets[best])
                        best = k;
                const double pc = 0.5 * (brackets[best] + brackets[best + 1]);
                const double wc = 0.5 * (brackets[best + 1] - brackets[best]);
                const double sgn = ctx.line.at(pc) >= 0.0 ? 1.0 : -1.0;
                const double wlo = std::max(-half_p, pc - 2.0 * wc - 2.0 * seed_dp);
                const double whi = std::min(half_p, pc + 2.0 * wc + 2.0 * seed_dp);
                const auto lobe_peak = [&](double xq) {
                    ctx.set_x(xq);
                    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
                    double a = wlo;
                    double b = whi;
                    double c = b - gr * (b - a);
                    double d = a + gr * (b - a);
                    double fc = sgn * ctx.line.at(c);
                    double fd = sgn * ctx.line.at(d);
                    for (int it = 0; it < 28; ++it) {
                        if (fc > fd) {
                            b = d;
                            d = c;
                            fd = fc;
                            c = b - gr * (b - a);
                            fc = sgn * ctx.line.at(c);
                        } else {
                            a = c;
                            c = d;
                            fc = fd;
                            d = a + gr * (b - a);
                            fd = sgn * ctx.line.at(d);
                        }
                    }
                    return std::max(fc, fd);
                };
                double plo = lobe_peak(xa);
                double phi = lobe_peak(xb);
                if ((plo > 0.0) != (phi > 0.0)) {
                    double lo = xa;
                    double hi = xb;
                    for (int it = 0; it < 20 && hi - lo > 3e-6 * half_x; ++it) {
                        const double mid = 0.5 * (lo + hi);
                        if ((lobe_peak(mid) > 0.0) == (plo > 0.0))
                            lo = mid;
                        else
                            hi = mid;
                    }
                    return 0.5 * (lo + hi);
                }
            }
        }
        double lo = xa;
        double hi = xb;
        for (int it = 0; it < 20 && hi - lo > 3e-6 * half_x; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (lobe_count_at(mid) == ca)
                lo = mid;
            else
                hi = mid;
        }
        return 0.5 * (lo + hi);
    };
    const double t_seed = wall();
    if (std::getenv("WIGNEG_FRONTIER_LOG"))
        std::fprintf(stderr, "[seed] nodes=[%d,%d] %.2fs\n", nodes[0], nodes[1],
                     t_seed - t0);
    std::vector<double> edges;
    edges.push_back(-half_x);
    for (size_t i = 0; i + 1 < nx; ++i)
        if (topology[i] != topology[i + 1]) edges.push_back(refined_edge(i));
    edges.push_back(half_x);
    const double t_edges = wall();
    if (std::getenv("WIGNEG_FRONTIER_LOG"))
        std::fprintf(stderr, "[edge] count=%zu %.2fs\n", edges.size() - 2,
                     t_edges - t_seed);

    const double n_estimate = std::max(std::abs(pairwise_sum(abs_seed_terms) - 1.0),
                                       kNegativityScaleFloor);
    const double outer_tol = 0.3 * tol * n_estimate;
    std::vector<double> scan, cuts, terms;
    long evals = 0;
    long progress = 0;
    const double abs_integral = adaptive_outer(
        [&](double x) {
            ctx.set_x(x);
            const double v =
                line_abs_integral(ctx.line, half_p, cfg.wigner_floor, scan, cuts, terms);
            if (std::getenv("WIGNEG_FRONTIER_LOG") && ++progress % 500 == 0)
                std::fprintf(stderr, "[outer] evals=%ld t=%.2fs cuts=%zu x=%.4f\n", progress,
                             wall() - t_edges, cuts.size() - 2, x);
            return v;
        },
        edges, outer_tol, &evals);
    if (std::getenv("WIGNEG_FRONTIER_LOG"))
        std::fprintf(stderr,
                     "[pass] nodes=[%d,%d] seed=%.2fs edges=%zu edget=%.2fs "
                     "outer_evals=%ld outert=%.2fs abs=%.8f\n",
                     nodes[0], nodes[1], t_seed - t0, edges.size() - 2, t_edges - t_seed,
                     evals, wall() - t_edges, abs_integral);

    PassResult res;
    res.abs_integral = abs_integral;
    res.signed_integral = pairwise_sum(signed_terms);
    return res;
}

PassResult one_mode_dm_pass(const Eigen::MatrixXcd& rho, const std::vector<double>& half_widths,
                            const std::vector<int>& nodes, double tol,
                            const NumericsConfig& cfg) {
    check_imag_residue(rho);
    DmLineContext ctx;
    ctx.prepare(rho, half_widths[0], half_widths[1], nodes[1]);
    return nested_abs_pass(ctx, half_widths, nodes, tol, cfg);
}

PassResult one_mode_pure_pass(const Eigen::VectorXcd& amps, const std::vector<double>& half_widths,
                              const std::vector<int>& nodes, double tol,
                              const NumericsConfig& cfg) {
    PureLineContext ctx;
    ctx.prepare(amps, half_widths[0], half_widths[1], nodes[1]);
    return nested_abs_pass(ctx, half_widths, nodes, tol, cfg);
}

// ---------- one-mode sample engines ----------

WignerSamples one_mode_dm_samples(const Eigen::MatrixXcd& rho, const PhaseGrid& grid) {
    check_imag_residue(rho);
    const QuadratureRule& ax = grid.axes[0];
    const QuadratureRule& ap = grid.axes[1];
    const size_t nx = ax.nodes.size();
    const size_t np = ap.nodes.size();
    WignerSamples out;
    out.grid = grid;
    out.values.resize(nx * np);
    std::vector<double> scratch;
    std::vector<double> weighted(nx * np);
    for (size_t i = 0; i < nx; ++i) {
        for (size_t j = 0; j < np; ++j) {
            const double v = wigner_point(rho, ax.nodes[i], ap.nodes[j], scratch);
            out.values[i * np + j] = v;
            weighted[i * np + j] = ax.weights[i] * ap.weights[j] * v;
        }
    }
    out.integral = pairwise_sum(weighted);
    return out;
}

WignerSamples one_mode_pure_samples(const Eigen::VectorXcd& amps, const PhaseGrid& grid) {
    const QuadratureRule& ax = grid.axes[0];
    const QuadratureRule& ap = grid.axes[1];
    const int nx = static_cast<int>(ax.nodes.size());
    const int np = static_cast<int>(ap.nodes.size());
    PureLineContext ctx;
    ctx.prepare(amps, grid.half_widths[0], grid.half_widths[1], np);
    WignerSamples out;
    out.grid = grid;
    out.values.resize(static_cast<size_t>(nx) * np);
    std::vector<double> weighted(static_cast<size_t>(nx) * np);
    for (int i = 0; i < nx; ++i) {
        ctx.set_x(ax.nodes[i]);
        for (int k = 0; k < np; ++k) {
            const double v = ctx.line.at(ap.nodes[k]);
            out.values[static_cast<size_t>(i) * np + k] = v;
            weighted[static_cast<size_t>(i) * np + k] = ax.weights[i] * ap.weights[k] * v;
        }
    }
    out.integral = pairwise_sum(weighted);
    return out;
}

// ---------- two-mode engine ----------

std::vector<double> flat_weights(const QuadratureRule& a, const QuadratureRule& b) {
    std::vector<double> w(a.weights.size() * b.weights.size());
    for (size_t i = 0; i < a.weights.size(); ++i)
        for (size_t j = 0; j < b.weights.size(); ++j)
            w[i * b.weights.size() + j] = a.weights[i] * b.weights[j];
    return w;
}

// Packed real kernel table: column n*dim+m holds Re W_nm for n > m, column
// m*dim+n holds Im W_nm, and the diagonal holds W_nn itself, so that a real
// dot product against the matching moment packing reproduces the complex
// Hermitian contraction.
Eigen::MatrixXd packed_kernel_table(int dim, const QuadratureRule& ax, const QuadratureRule& ap) {
    const size_t nx = ax.nodes.size();
    const size_t np = ap.nodes.size();
    Eigen::MatrixXd table(nx * np, static_cast<size_t>(dim) * dim);
    std::vector<Complex> pairs;
    std::vector<double> scratch;
    for (size_t i = 0; i < nx; ++i) {
        for (size_t j = 0; j < np; ++j) {
            const size_t row = i * np + j;
            dyad_kernels_at(dim, ax.nodes[i], ap.nodes[j], pairs, scratch);
            for (int n = 0; n < dim; ++n) {
                table(row, static_cast<size_t>(n) * dim + n) =
                    pairs[static_cast<size_t>(n) * dim + n].real();
                for (int m = 0; m < n; ++m) {
                    const Complex w = pairs[static_cast<size_t>(n) * dim + m];
                    table(row, static_cast<size_t>(n) * dim + m) = w.real();
                    table(row, static_cast<size_t>(m) * dim + n) = w.imag();
                }
            }
        }
    }
    return table;
}

// W over the tensor grid of two modes, streamed in blocks of mode-B points.
// The mode with the smaller Fock dimension is contracted through the large
// real product, so the cost scales with the small dimension squared.
PassResult two_mode_pass(const Eigen::MatrixXcd& rho, int dim0, int dim1, const PhaseGrid& grid,
                         const NumericsConfig& cfg, WignerSamples* keep) {
    check_imag_residue(rho);
    const bool swap = dim1 < dim0;
    const int da = swap ? dim1 : dim0;  // small dimension, contracted densely
    const int db = swap ? dim0 : dim1;
    const int ax_a = swap ? 2 : 0;
    const int ax_b = swap ? 0 : 2;
    const long ga = static_cast<long>(grid.axes[ax_a].nodes.size()) *
                    grid.axes[ax_a + 1].nodes.size();
    const long gb = static_cast<long>(grid.axes[ax_b].nodes.size()) *
                    grid.axes[ax_b + 1].nodes.size();
    if (keep != nullptr && ga * gb > kMaxMaterialized)
        throw InvalidArgument("two-mode grid with " + std::to_string(ga * gb) +
                              " points is too large to materialize");

    // Rearranged state: row (n*da+m), column (k*db+l) holds <n k|rho|m l> with
    // n, m on the small mode.
    Eigen::MatrixXcd rearranged(static_cast<size_t>(da) * da, static_cast<size_t>(db) * db);
    for (int n = 0; n < da; ++n)
        for (int m = 0; m < da; ++m)
            for (int k = 0; k < db; ++k)
                for (int l = 0; l < db; ++l) {
                    const long row = swap ? static_cast<long>(k) * da + n
                                          : static_cast<long>(n) * db + k;
                    const long col = swap ? static_cast<long>(l) * da + m
                                          : static_cast<long>(m) * db + l;
                    rearranged(static_cast<size_t>(n) * da + m,
                               static_cast<size_t>(k) * db + l) = rho(row, col);
                }

    const Eigen::MatrixXd table_a = packed_kernel_table(da, grid.axes[ax_a], grid.axes[ax_a + 1]);
    const std::vector<double> wa = flat_weights(grid.axes[ax_a], grid.axes[ax_a + 1]);
    const std::vector<double> wb = flat_weights(grid.axes[ax_b], grid.axes[ax_b + 1]);

    if (keep != nullptr) {
        keep->grid = grid;
        keep->values.assign(static_cast<size_t>(ga) * gb, 0.0);
    }

    const long block = 128;
    const long npb = static_cast<long>(grid.axes[ax_b + 1].nodes.size());
    Eigen::MatrixXcd kernels_b(block, static_cast<size_t>(db) * db);
    Eigen::MatrixXcd moments;
    Eigen::MatrixXd packed(static_cast<size_t>(da) * da, block);
    Eigen::MatrixXd chunk;
    std::vector<Complex> pairs;
    std::vector<double> scratch;
    std::vector<double> abs_buf(static_cast<size_t>(ga));
    std::vector<double> sgn_buf(static_cast<size_t>(ga));
    std::vector<double> col_abs(static_cast<size_t>(gb));
    std::vector<double> col_sgn(static_cast<size_t>(gb));
    for (long j0 = 0; j0 < gb; j0 += block) {
        const long bl = std::min(block, gb - j0);
        for (long c = 0; c < bl; ++c) {
            const long j = j0 + c;
            const double xb = grid.axes[ax_b].nodes[static_cast<size_t>(j / npb)];
            const double pb = grid.axes[ax_b + 1].nodes[static_cast<size_t>(j % npb)];
            dyad_kernels_at(db, xb, pb, pairs, scratch);
            for (size_t t = 0; t < pairs.size(); ++t) kernels_b(c, t) = pairs[t];
        }
        // moments(nm, c) = sum_{kl} rho_{(nk),(ml)} W_kl(r_c), Hermitian in (n, m).
        moments.noalias() = rearranged * kernels_b.topRows(bl).transpose();
        for (long c = 0; c < bl; ++c) {
            for (int n = 0; n < da; ++n) {
                packed(static_cast<size_t>(n) * da + n, c) =
                    moments(static_cast<size_t>(n) * da + n, c).real();
                for (int m = 0; m < n; ++m) {
                    const Complex v = moments(static_cast<size_t>(n) * da + m, c);
                    packed(static_cast<size_t>(n) * da + m, c) = 2.0 * v.real();
                    packed(static_cast<size_t>(m) * da + n, c) = -2.0 * v.imag();
                }
            }
        }
        chunk.noalias() = table_a * packed.leftCols(bl);
        for (long c = 0; c < bl; ++c) {
            const long j = j0 + c;
            for (long i = 0; i < ga; ++i) {
                const double v = chunk(i, c);
                const double av = std::abs(v);
                abs_buf[static_cast<size_t>(i)] =
                    wa[static_cast<size_t>(i)] * (av < cfg.wigner_floor ? 0.0 : av);
                sgn_buf[static_cast<size_t>(i)] = wa[static_cast<size_t>(i)] * v;
                if (keep != nullptr) {
                    const size_t idx = swap ? static_cast<size_t>(j) * ga + i
                                            : static_cast<size_t>(i) * gb + j;
                    keep->values[idx] = v;
                }
            }
            col_abs[static_cast<size_t>(j)] = wb[static_cast<size_t>(j)] * pairwise_sum(abs_buf);
            col_sgn[static_cast<size_t>(j)] = wb[static_cast<size_t>(j)] * pairwise_sum(sgn_buf);
        }
    }
    PassResult res;
    res.abs_integral = pairwise_sum(col_abs);
    res.signed_integral = pairwise_sum(col_sgn);
    if (keep != nullptr) keep->integral = res.signed_integral;
    return res;
}

// ---------- refinement driver ----------

// One-mode boxes come pre-sized from the state's own marginals, so refinement
// only sharpens the rules; the two-mode tensor grid still alternates node and
// width growth because its box is covariance-guessed.
template <class Eval>
NegativityReport refine_to_convergence(std::vector<double> half_widths, std::vector<int> nodes,
                                       double tol, const NumericsConfig& cfg, bool grow_widths,
                                       Eval&& eval) {
    PassResult pass = eval(half_widths, nodes);
    double prev = pass.abs_integral - 1.0;
    double current = prev;
    bool converged = false;
    int iterations = 0;
    for (int it = 1; it <= cfg.max_refinements; ++it) {
        if (!grow_widths || it % 2 == 1) {
            for (int& n : nodes) n = n + n / 2;  // x1.5 keeps repeated 4-d passes affordable
        } else {
            for (double& l : half_widths) l *= 1.5;
        }
        pass = eval(half_widths, nodes);
        current = pass.abs_integral - 1.0;
        iterations = it;
        const bool trace_ok = std::abs(pass.signed_integral - 1.0) <= kTraceSlack * tol;
        if (std::abs(current - prev) <=
                tol * std::max(std::abs(current), kNegativityScaleFloor) &&
            trace_ok) {
            converged = true;
            break;
        }
        prev = current;
    }
    if (!converged)
        throw ConvergenceFailure(
            "integrated Wigner mass did not settle within the refinement budget", prev, current);
    NegativityReport report;
    report.negativity = std::max(current, 0.0);
    report.log_negativity = std::log2(1.0 + report.negativity);
    report.half_widths = std::move(half_widths);
    report.node_counts = std::move(nodes);
    report.refinements = iterations;
    report.converged = true;
    return report;
}

const Eigen::MatrixXcd& dense_matrix(const DensityMatrix& rho) {
    if (rho.unnormalized())
        throw InvalidArgument("normalize the state before phase-space evaluation");
    return rho.matrix();
}

}  // namespace

// ---------- PhaseGrid ----------

PhaseGrid PhaseGrid::symmetric(std::vector<double> half_widths, std::vector<int> node_counts) {
    if (half_widths.size() != node_counts.size())
        throw InvalidArgument("grid half-width and node-count lists differ in length");
    if (half_widths.empty() || half_widths.size() % 2 != 0)
        throw InvalidArgument("phase-space grids need one (x, p) axis pair per mode");
    PhaseGrid grid;
    grid.half_widths = std::move(half_widths);
    grid.node_counts = std::move(node_counts);
    grid.axes.reserve(grid.half_widths.size());
    for (size_t i = 0; i < grid.half_widths.size(); ++i) {
        if (!(grid.half_widths[i] > 0.0))
            throw InvalidArgument("grid half-widths must be positive");
        if (grid.node_counts[i] < 2)
            throw InvalidArgument("grid axes need at least two nodes");
        grid.axes.push_back(
            gauss_legendre(grid.node_counts[i], -grid.half_widths[i], grid.half_widths[i]));
    }
    return grid;
}

long PhaseGrid::total_points() const {
    long total = 1;
    for (const auto& ax : axes) total *= static_cast<long>(ax.nodes.size());
    return total;
}

// ---------- public API ----------

PhaseGrid automatic_grid(const PureStateVector& psi, const NumericsConfig& cfg) {
    const int modes = psi.layout().modes();
    check_mode_count(modes);
    PhaseGrid grid = grid_from_moments(ladder_moments(psi), modes,
                                       modes == 1 ? kNodesOneMode : kNodesTwoMode);
    if (modes == 1) {
        const Eigen::VectorXcd& c = psi.amplitudes();
        const int dim = static_cast<int>(c.size());
        widen_by_marginals(
            grid.half_widths, dim,
            [&](const std::vector<double>& eig) {
                Complex s = 0.0;
                for (int n = 0; n < dim; ++n) s += c(n) * eig[static_cast<size_t>(n)];
                return std::norm(s);
            },
            [&](const std::vector<double>& eig) {
                Complex s = 0.0;
                Complex ph = 1.0;  // <p|n> carries (-i)^n relative to <x|n>
                for (int n = 0; n < dim; ++n) {
                    s += c(n) * ph * eig[static_cast<size_t>(n)];
                    ph *= Complex(0.0, -1.0);
                }
                return std::norm(s);
            },
            cfg.tol_int);
        return PhaseGrid::symmetric(std::move(grid.half_widths),
                                    std::move(grid.node_counts));
    }
    return grid;
}

PhaseGrid automatic_grid(const DensityMatrix& rho, const NumericsConfig& cfg) {
    const int modes = rho.layout().modes();
    check_mode_count(modes);
    PhaseGrid grid = grid_from_moments(ladder_moments(rho), modes,
                                       modes == 1 ? kNodesOneMode : kNodesTwoMode);
    if (modes == 1) {
        const Eigen::MatrixXcd& m = rho.matrix();
        const Eigen::MatrixXd m_re = m.real();
        const int dim = static_cast<int>(m.rows());
        Eigen::VectorXcd w(dim);
        widen_by_marginals(
            grid.half_widths, dim,
            [&](const std::vector<double>& eig) {
                const Eigen::Map<const Eigen::VectorXd> v(eig.data(), dim);
                return std::max(0.0, v.dot(m_re * v));
            },
            [&](const std::vector<double>& eig) {
                Complex ph = 1.0;
                for (int n = 0; n < dim; ++n) {
                    w(n) = ph * eig[static_cast<size_t>(n)];
                    ph *= Complex(0.0, -1.0);
                }
                return std::max(0.0, (w.adjoint() * m * w)(0).real());
            },
            cfg.tol_int);
        return PhaseGrid::symmetric(std::move(grid.half_widths),
                                    std::move(grid.node_counts));
    }
    return grid;
}

Complex wigner_basis(int n, int m, double x, double p) {
    if (n < 0 || m < 0) throw InvalidArgument("dyad kernel indices must be non-negative");
    const int k = std::abs(n - m);
    const int lo = std::min(n, m);
    std::vector<double> g;
    weighted_laguerre_column(k, 2.0 * (x * x + p * p), lo + 1, g);
    const double sign = (lo % 2 == 0) ? 1.0 : -1.0;
    const Complex val = (sign / kPi) * g[static_cast<size_t>(lo)] *
                        std::polar(1.0, -k * std::atan2(p, x));
    return n >= m ? val : std::conj(val);
}

WignerSamples wigner_of(const DensityMatrix& rho, const PhaseGrid& grid,
                        const NumericsConfig& cfg) {
    const int modes = rho.layout().modes();
    check_mode_count(modes);
    if (static_cast<int>(grid.axes.size()) != 2 * modes)
        throw InvalidArgument("grid axis count does not match the state's mode count");
    if (modes == 1) return one_mode_dm_samples(dense_matrix(rho), grid);
    WignerSamples out;
    two_mode_pass(dense_matrix(rho), rho.layout().dims[0], rho.layout().dims[1], grid, cfg, &out);
    return out;
}

WignerSamples wigner_of(const PureStateVector& psi, const PhaseGrid& grid,
                        const NumericsConfig& cfg) {
    const int modes = psi.layout().modes();
    check_mode_count(modes);
    if (static_cast<int>(grid.axes.size()) != 2 * modes)
        throw InvalidArgument("grid axis count does not match the state's mode count");
    if (modes == 1) return one_mode_pure_samples(psi.amplitudes(), grid);
    return wigner_of(DensityMatrix::from_pure(psi), grid, cfg);
}

double negativity_on(const DensityMatrix& rho, const PhaseGrid& grid, const NumericsConfig& cfg) {
    const int modes = rho.layout().modes();
    check_mode_count(modes);
    if (modes == 1)
        return one_mode_dm_pass(dense_matrix(rho), grid.half_widths, grid.node_counts,
                                cfg.tol_int, cfg)
                   .abs_integral -
               1.0;
    return two_mode_pass(dense_matrix(rho), rho.layout().dims[0], rho.layout().dims[1], grid, cfg,
                         nullptr)
               .abs_integral -
           1.0;
}

double negativity_on(const PureStateVector& psi, const PhaseGrid& grid, const NumericsConfig& cfg) {
    if (psi.layout().modes() == 1)
        return one_mode_pure_pass(psi.amplitudes(), grid.half_widths, grid.node_counts,
                                  cfg.tol_int, cfg)
                   .abs_integral -
               1.0;
    return negativity_on(DensityMatrix::from_pure(psi), grid, cfg);
}

NegativityReport negativity_report(const DensityMatrix& rho, const NumericsConfig& cfg) {
    const int modes = rho.layout().modes();
    check_mode_count(modes);
    const PhaseGrid start = automatic_grid(rho, cfg);
    const Eigen::MatrixXcd& mat = dense_matrix(rho);
    if (modes == 1) {
        return refine_to_convergence(start.half_widths, start.node_counts, cfg.tol_int, cfg,
                                     false,
                                     [&](const std::vector<double>& l, const std::vector<int>& n) {
                                         return one_mode_dm_pass(mat, l, n, cfg.tol_int, cfg);
                                     });
    }
    const double tol2 = std::max(cfg.tol_int, kTwoModeTolFloor);
    return refine_to_convergence(start.half_widths, start.node_counts, tol2, cfg, true,
                                 [&](const std::vector<double>& l, const std::vector<int>& n) {
                                     return two_mode_pass(mat, rho.layout().dims[0],
                                                          rho.layout().dims[1],
                                                          PhaseGrid::symmetric(l, n), cfg, nullptr);
                                 });
}

NegativityReport negativity_report(const PureStateVector& psi, const NumericsConfig& cfg) {
    const int modes = psi.layout().modes();
    check_mode_count(modes);
    if (modes == 2) return negativity_report(DensityMatrix::from_pure(psi), cfg);
    const PhaseGrid start = automatic_grid(psi, cfg);
    const Eigen::VectorXcd& amps = psi.amplitudes();
    return refine_to_convergence(start.half_widths, start.node_counts, cfg.tol_int, cfg, false,
                                 [&](const std::vector<double>& l, const std::vector<int>& n) {
                                     return one_mode_pure_pass(amps, l, n, cfg.tol_int, cfg);
                                 });
}

double negativity(const DensityMatrix& rho, const NumericsConfig& cfg) {
    return negativity_report(rho, cfg).negativity;
}

double negativity(const PureStateVector& psi, const NumericsConfig& cfg) {
    return negativity_report(psi, cfg).negativity;
}

double wln(const DensityMatrix& rho, const NumericsConfig& cfg) {
    return negativity_report(rho, cfg).log_negativity;
}

double wln(const PureStateVector& psi, const NumericsConfig& cfg) {
    return negativity_report(psi, cfg).log_negativity;
}

}  // namespace wigneg
