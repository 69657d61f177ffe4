#include "wigneg/fock_core.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>

#include "wigneg/errors.hpp"

namespace wigneg {

namespace {

// Strides for row-major composite indices (mode 0 slowest).
std::vector<long> layout_strides(const ModeLayout& layout) {
    const int n = layout.modes();
    std::vector<long> s(n);
    long acc = 1;
    for (int i = n - 1; i >= 0; --i) {
        s[i] = acc;
        acc *= layout.dims[i];
    }
    return s;
}

void check_modes(const ModeLayout& layout, const std::vector<int>& modes) {
    if (modes.empty()) throw InvalidArgument("mode list must not be empty");
    for (int m : modes) {
        if (m < 0 || m >= layout.modes())
            throw InvalidArgument("mode index " + std::to_string(m) + " out of range");
    }
    std::vector<int> sorted = modes;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw InvalidArgument("mode list contains duplicates");
}

// Offsets of every local basis state of `modes` within the full space, plus
// the offsets of every configuration of the remaining modes.  Any composite
// index splits uniquely as local_offsets[l] + env_offsets[e].
struct SplitOffsets {
    std::vector<long> local_offsets;
    std::vector<long> env_offsets;
    std::vector<int> local_dims;
};

SplitOffsets split_offsets(const ModeLayout& layout, const std::vector<int>& modes) {
    check_modes(layout, modes);
    const auto strides = layout_strides(layout);

    SplitOffsets out;
    out.local_dims.reserve(modes.size());
    for (int m : modes) out.local_dims.push_back(layout.dims[m]);

    long local_total = 1;
    for (int d : out.local_dims) local_total *= d;
    out.local_offsets.assign(local_total, 0);
    for (long l = 0; l < local_total; ++l) {
        long rem = l, off = 0;
        for (int k = static_cast<int>(modes.size()) - 1; k >= 0; --k) {
            const int digit = static_cast<int>(rem % out.local_dims[k]);
            rem /= out.local_dims[k];
            off += digit * strides[modes[k]];
        }
        out.local_offsets[l] = off;
    }

    std::vector<int> env_modes;
    for (int m = 0; m < layout.modes(); ++m)
        if (std::find(modes.begin(), modes.end(), m) == modes.end()) env_modes.push_back(m);
    long env_total = 1;
    for (int m : env_modes) env_total *= layout.dims[m];
    out.env_offsets.assign(env_total, 0);
    for (long e = 0; e < env_total; ++e) {
        long rem = e, off = 0;
        for (int k = static_cast<int>(env_modes.size()) - 1; k >= 0; --k) {
            const int d = layout.dims[env_modes[k]];
            off += static_cast<int>(rem % d) * strides[env_modes[k]];
            rem /= d;
        }
        out.env_offsets[e] = off;
    }
    return out;
}

Eigen::MatrixXcd kron(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
    Eigen::MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

Eigen::VectorXcd kron_vec(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) {
    Eigen::VectorXcd out(a.size() * b.size());
    for (Eigen::Index i = 0; i < a.size(); ++i)
        out.segment(i * b.size(), b.size()) = a(i) * b;
    return out;
}

void check_hermitian(const Eigen::MatrixXcd& m, double tol, const char* what) {
    const double dev = (m - m.adjoint()).cwiseAbs().maxCoeff();
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if (dev > tol * scale)
        throw InvalidState(std::string(what) + ": Hermiticity deviation " + std::to_string(dev));
}

// Mass with any involved-mode digit at or above its cut.
double mass_above(const Eigen::VectorXd& population, const ModeLayout& padded,
                  const std::vector<int>& modes, const std::vector<int>& cuts) {
    const auto strides = layout_strides(padded);
    double mass = 0.0;
    for (long i = 0; i < population.size(); ++i) {
        bool outside = false;
        for (std::size_t k = 0; k < modes.size(); ++k) {
            const int m = modes[k];
            const int digit = static_cast<int>((i / strides[m]) % padded.dims[m]);
            if (digit >= cuts[k]) {
                outside = true;
                break;
            }
        }
        if (outside) mass += population(i);
    }
    return mass;
}

}  // namespace

// ---------- layouts and states ----------

ModeLayout::ModeLayout(std::vector<int> d) : dims(std::move(d)) {
    if (dims.empty()) throw InvalidArgument("ModeLayout: need at least one mode");
    for (int x : dims)
        if (x < 1) throw InvalidArgument("ModeLayout: dims must be >= 1");
}

int ModeLayout::total() const {
    long acc = 1;
    for (int d : dims) {
        acc *= d;
        if (acc > (1L << 26))
            throw InvalidArgument("ModeLayout: composite dimension too large");
    }
    return static_cast<int>(acc);
}

PureStateVector::PureStateVector(ModeLayout layout, Eigen::VectorXcd amplitudes,
                                 bool require_normalized, double eps)
    : layout_(std::move(layout)), amp_(std::move(amplitudes)) {
    if (amp_.size() != layout_.total())
        throw InvalidArgument("PureStateVector: amplitude count does not match layout");
    if (require_normalized) {
        const double n2 = amp_.squaredNorm();
        if (n2 < 1.0 - eps || n2 > 1.0 + 1e-10)
            throw InvalidState("PureStateVector: squared norm " + std::to_string(n2) +
                               " outside [1 - " + std::to_string(eps) + ", 1]");
    }
}

PureStateVector PureStateVector::renormalized() const {
    const double n = amp_.norm();
    if (n == 0.0) throw InvalidState("PureStateVector: cannot renormalize zero vector");
    return PureStateVector(layout_, amp_ / n, true, 1e-12);
}

DensityMatrix::DensityMatrix(ModeLayout layout, Eigen::MatrixXcd matrix, bool unnormalized,
                             double eps)
    : layout_(std::move(layout)), mat_(std::move(matrix)), unnormalized_(unnormalized) {
    const int t = layout_.total();
    if (mat_.rows() != t || mat_.cols() != t)
        throw InvalidArgument("DensityMatrix: matrix shape does not match layout");
    check_hermitian(mat_, 1e-10, "DensityMatrix");
    const double tr = mat_.trace().real();
    if (!unnormalized_ && (tr < 1.0 - eps || tr > 1.0 + 1e-10))
        throw InvalidState("DensityMatrix: trace " + std::to_string(tr) + " not ~1");
    if (tr < -1e-12) throw InvalidState("DensityMatrix: negative trace");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(mat_, Eigen::EigenvaluesOnly);
    const double scale = std::max(tr, mat_.cwiseAbs().maxCoeff());
    if (es.eigenvalues().minCoeff() < -1e-9 * std::max(1.0, scale))
        throw InvalidState("DensityMatrix: negative eigenvalue " +
                           std::to_string(es.eigenvalues().minCoeff()));
}

DensityMatrix DensityMatrix::from_pure(const PureStateVector& psi) {
    const auto& v = psi.amplitudes();
    return DensityMatrix(psi.layout(), v * v.adjoint(), false, 1e-6);
}

DensityMatrix DensityMatrix::normalized() const {
    const double tr = trace_real();
    if (tr <= 0.0) throw InvalidState("DensityMatrix: cannot normalize, trace <= 0");
    return DensityMatrix(layout_, mat_ / tr, false, 1e-9);
}

// ---------- operators ----------

Eigen::MatrixXcd ladder(int dim) {
    if (dim < 1) throw InvalidArgument("ladder: dim must be >= 1");
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(dim, dim);
    for (int n = 1; n < dim; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
    return a;
}

Eigen::MatrixXcd number_op(int dim) {
    Eigen::MatrixXcd n = Eigen::MatrixXcd::Zero(dim, dim);
    for (int k = 0; k < dim; ++k) n(k, k) = static_cast<double>(k);
    return n;
}

Eigen::MatrixXcd position_op(int dim) {
    const Eigen::MatrixXcd a = ladder(dim);
    return (a + a.adjoint()) / std::sqrt(2.0);
}

Eigen::MatrixXcd momentum_op(int dim) {
    const Eigen::MatrixXcd a = ladder(dim);
    return Complex(0.0, -1.0) * (a - a.adjoint()) / std::sqrt(2.0);
}

Eigen::MatrixXcd embed_local(const Eigen::MatrixXcd& op, const ModeLayout& layout,
                             const std::vector<int>& modes) {
    const auto split = split_offsets(layout, modes);
    const long dl = static_cast<long>(split.local_offsets.size());
    if (op.rows() != dl || op.cols() != dl)
        throw InvalidArgument("embed_local: operator shape does not match listed modes");
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(layout.total(), layout.total());
    for (long e : split.env_offsets)
        for (long r = 0; r < dl; ++r)
            for (long c = 0; c < dl; ++c) {
                const Complex v = op(r, c);
                if (v != 0.0) out(e + split.local_offsets[r], e + split.local_offsets[c]) = v;
            }
    return out;
}

// ---------- gaussian unitary specs ----------

GaussianUnitarySpec GaussianUnitarySpec::displacement(Complex alpha, int mode) {
    GaussianUnitarySpec s;
    s.kind = Kind::displacement;
    s.alpha = alpha;
    s.modes = {mode};
    return s;
}

GaussianUnitarySpec GaussianUnitarySpec::squeeze(double r, double psi, int mode) {
    GaussianUnitarySpec s;
    s.kind = Kind::squeeze;
    s.r = r;
    s.psi = psi;
    s.modes = {mode};
    return s;
}

GaussianUnitarySpec GaussianUnitarySpec::beamsplitter(double transmissivity, double theta,
                                                      int mode_a, int mode_b) {
    if (transmissivity < 0.0 || transmissivity > 1.0)
        throw InvalidArgument("beamsplitter: transmissivity must lie in [0, 1]");
    GaussianUnitarySpec s;
    s.kind = Kind::beamsplitter;
    s.transmissivity = transmissivity;
    s.theta = theta;
    s.modes = {mode_a, mode_b};
    return s;
}

GaussianUnitarySpec GaussianUnitarySpec::phase(double phi, int mode) {
    GaussianUnitarySpec s;
    s.kind = Kind::phase;
    s.phi = phi;
    s.modes = {mode};
    return s;
}

namespace {

GeneratorBuilder builder_for(const GaussianUnitarySpec& spec) {
    using Kind = GaussianUnitarySpec::Kind;
    switch (spec.kind) {
        case Kind::displacement:
            return [alpha = spec.alpha](const std::vector<int>& dims) {
                const Eigen::MatrixXcd a = ladder(dims.at(0));
                return (alpha * a.adjoint() - std::conj(alpha) * a).eval();
            };
        case Kind::squeeze:
            return [xi = std::polar(std::abs(spec.r), spec.psi + (spec.r < 0 ? M_PI : 0.0))](
                       const std::vector<int>& dims) {
                const Eigen::MatrixXcd a = ladder(dims.at(0));
                const Eigen::MatrixXcd ad = a.adjoint();
                return (0.5 * xi * (ad * ad) - 0.5 * std::conj(xi) * (a * a)).eval();
            };
        case Kind::beamsplitter:
            return [t = spec.transmissivity, theta = spec.theta](const std::vector<int>& dims) {
                const double phi = std::acos(std::clamp(std::sqrt(t), 0.0, 1.0));
                const Eigen::MatrixXcd a = ladder(dims.at(0));
                const Eigen::MatrixXcd b = ladder(dims.at(1));
                const Eigen::MatrixXcd ia = Eigen::MatrixXcd::Identity(dims.at(0), dims.at(0));
                const Eigen::MatrixXcd ib = Eigen::MatrixXcd::Identity(dims.at(1), dims.at(1));
                const Eigen::MatrixXcd adb = kron(a.adjoint(), ib) * kron(ia, b);
                return (phi * (std::polar(1.0, theta) * adb -
                               std::polar(1.0, -theta) * adb.adjoint()))
                    .eval();
            };
        case Kind::phase:
            return [phi = spec.phi](const std::vector<int>& dims) {
                return (Complex(0.0, -phi) * number_op(dims.at(0))).eval();
            };
    }
    throw InvalidArgument("unknown gaussian unitary kind");
}

struct PaddedOp {
    ModeLayout padded;
    Eigen::MatrixXcd unitary_full;  // exp(G) embedded in the padded space
    std::vector<int> orig_dims;     // original dims of the involved modes
};

PaddedOp prepare_padded(const ModeLayout& layout, const GeneratorBuilder& builder,
                        const std::vector<int>& modes) {
    check_modes(layout, modes);
    PaddedOp out;
    out.padded = layout;
    for (int m : modes) {
        const int d = layout.dims[m];
        out.orig_dims.push_back(d);
        out.padded.dims[m] = d + std::max(8, d / 8);
    }
    std::vector<int> local_dims;
    for (int m : modes) local_dims.push_back(out.padded.dims[m]);

    Eigen::MatrixXcd gen = builder(local_dims);
    check_hermitian(Eigen::MatrixXcd(Complex(0, 1) * gen), 1e-10, "generator (times i)");
    const Eigen::MatrixXcd u_local = gen.exp();
    out.unitary_full = embed_local(u_local, out.padded, modes);
    return out;
}

Eigen::VectorXcd embed_amplitudes(const Eigen::VectorXcd& amp, const ModeLayout& from,
                                  const ModeLayout& to) {
    const auto sf = layout_strides(from);
    const auto st = layout_strides(to);
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(to.total());
    for (long i = 0; i < amp.size(); ++i) {
        long rem = i, j = 0;
        for (int m = 0; m < from.modes(); ++m) {
            const long digit = rem / sf[m];
            rem %= sf[m];
            j += digit * st[m];
        }
        out(j) = amp(i);
    }
    return out;
}

Eigen::VectorXcd crop_amplitudes(const Eigen::VectorXcd& amp, const ModeLayout& from,
                                 const ModeLayout& to) {
    const auto sf = layout_strides(from);
    const auto st = layout_strides(to);
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(to.total());
    for (long j = 0; j < out.size(); ++j) {
        long rem = j, i = 0;
        for (int m = 0; m < to.modes(); ++m) {
            const long digit = rem / st[m];
            rem %= st[m];
            i += digit * sf[m];
        }
        out(j) = amp(i);
    }
    return out;
}

[[noreturn]] void throw_overflow(const Eigen::VectorXd& population, const ModeLayout& padded,
                                 const std::vector<int>& modes, const ModeLayout& layout,
                                 double leak, double budget, bool edge_hit) {
    // Suggest, per involved mode, the smallest dimension whose marginal tail
    // stays within budget; double instead when even the padding was too tight.
    std::vector<int> suggestion = layout.dims;
    const auto strides = layout_strides(padded);
    for (std::size_t k = 0; k < modes.size(); ++k) {
        const int m = modes[k];
        if (edge_hit) {
            suggestion[m] = 2 * layout.dims[m];
            continue;
        }
        std::vector<double> marginal(padded.dims[m], 0.0);
        for (long i = 0; i < population.size(); ++i)
            marginal[(i / strides[m]) % padded.dims[m]] += population(i);
        double tail = 0.0;
        int needed = padded.dims[m];
        for (int d = padded.dims[m]; d >= 1; --d) {
            tail += marginal[d - 1];
            if (tail > 0.5 * budget / static_cast<double>(modes.size())) {
                needed = d + 1;
                break;
            }
        }
        suggestion[m] = std::max(needed + 2, layout.dims[m]);
    }
    std::string dims_text;
    for (std::size_t i = 0; i < suggestion.size(); ++i)
        dims_text += (i ? "," : "") + std::to_string(suggestion[i]);
    throw TruncationOverflow("truncation leakage " + std::to_string(leak) +
                                 " exceeds budget " + std::to_string(budget) +
                                 "; retry with dims >= [" + dims_text + "]",
                             suggestion);
}

}  // namespace

namespace {

std::vector<int> edge_cuts(const PaddedOp& op, const std::vector<int>& modes) {
    std::vector<int> cuts;
    for (int m : modes) cuts.push_back(op.padded.dims[m] - 2);
    return cuts;
}

}  // namespace

PureStateVector apply_generated_unitary(const PureStateVector& psi,
                                        const GeneratorBuilder& builder,
                                        const std::vector<int>& modes,
                                        const NumericsConfig& cfg) {
    const auto op = prepare_padded(psi.layout(), builder, modes);
    const Eigen::VectorXcd embedded = embed_amplitudes(psi.amplitudes(), psi.layout(), op.padded);
    const Eigen::VectorXcd evolved = op.unitary_full * embedded;

    const Eigen::VectorXd population = evolved.cwiseAbs2();
    const double leak = mass_above(population, op.padded, modes, op.orig_dims);
    // Mass near the padding's own ceiling means the leak estimate itself is
    // not trustworthy; treat that as an overflow too.
    const double edge = mass_above(population, op.padded, modes, edge_cuts(op, modes));
    if (leak > cfg.eps_trunc || edge > 0.1 * cfg.eps_trunc)
        throw_overflow(population, op.padded, modes, psi.layout(), leak, cfg.eps_trunc,
                       edge > 0.1 * cfg.eps_trunc);

    return PureStateVector(psi.layout(), crop_amplitudes(evolved, op.padded, psi.layout()), true,
                           64.0 * cfg.eps_trunc);
}

DensityMatrix apply_generated_unitary(const DensityMatrix& rho, const GeneratorBuilder& builder,
                                      const std::vector<int>& modes, const NumericsConfig& cfg) {
    const auto op = prepare_padded(rho.layout(), builder, modes);

    // Embed rho by embedding each basis index on rows and columns.
    const long t_old = rho.layout().total();
    const long t_new = op.padded.total();
    std::vector<long> index_map(t_old);
    {
        const auto sf = layout_strides(rho.layout());
        const auto st = layout_strides(op.padded);
        for (long i = 0; i < t_old; ++i) {
            long rem = i, j = 0;
            for (int m = 0; m < rho.layout().modes(); ++m) {
                const long digit = rem / sf[m];
                rem %= sf[m];
                j += digit * st[m];
            }
            index_map[i] = j;
        }
    }
    Eigen::MatrixXcd big = Eigen::MatrixXcd::Zero(t_new, t_new);
    for (long r = 0; r < t_old; ++r)
        for (long c = 0; c < t_old; ++c) big(index_map[r], index_map[c]) = rho.matrix()(r, c);

    const Eigen::MatrixXcd evolved = op.unitary_full * big * op.unitary_full.adjoint();

    const Eigen::VectorXd population = evolved.diagonal().real();
    const double leak = mass_above(population, op.padded, modes, op.orig_dims);
    const double edge = mass_above(population, op.padded, modes, edge_cuts(op, modes));
    const double scale = std::max(1e-300, rho.trace_real());
    if (leak > cfg.eps_trunc * scale || edge > 0.1 * cfg.eps_trunc * scale)
        throw_overflow(population, op.padded, modes, rho.layout(), leak, cfg.eps_trunc * scale,
                       edge > 0.1 * cfg.eps_trunc * scale);

    Eigen::MatrixXcd cropped(t_old, t_old);
    for (long r = 0; r < t_old; ++r)
        for (long c = 0; c < t_old; ++c) cropped(r, c) = evolved(index_map[r], index_map[c]);
    return DensityMatrix(rho.layout(), std::move(cropped), rho.unnormalized(),
                         64.0 * cfg.eps_trunc);
}

PureStateVector apply_gaussian_unitary(const PureStateVector& psi,
                                       const GaussianUnitarySpec& spec,
                                       const NumericsConfig& cfg) {
    return apply_generated_unitary(psi, builder_for(spec), spec.modes, cfg);
}

DensityMatrix apply_gaussian_unitary(const DensityMatrix& rho, const GaussianUnitarySpec& spec,
                                     const NumericsConfig& cfg) {
    return apply_generated_unitary(rho, builder_for(spec), spec.modes, cfg);
}

// ---------- composition and reduction ----------

PureStateVector tensor(const PureStateVector& a, const PureStateVector& b) {
    ModeLayout layout;
    layout.dims = a.layout().dims;
    layout.dims.insert(layout.dims.end(), b.layout().dims.begin(), b.layout().dims.end());
    return PureStateVector(layout, kron_vec(a.amplitudes(), b.amplitudes()), true, 1e-6);
}

DensityMatrix tensor(const DensityMatrix& a, const DensityMatrix& b) {
    ModeLayout layout;
    layout.dims = a.layout().dims;
    layout.dims.insert(layout.dims.end(), b.layout().dims.begin(), b.layout().dims.end());
    return DensityMatrix(layout, kron(a.matrix(), b.matrix()),
                         a.unnormalized() || b.unnormalized(), 1e-6);
}

namespace {

Eigen::MatrixXcd partial_trace_raw(const Eigen::MatrixXcd& mat, const ModeLayout& layout,
                                   const std::vector<int>& keep) {
    std::vector<int> traced;
    for (int m = 0; m < layout.modes(); ++m)
        if (std::find(keep.begin(), keep.end(), m) == keep.end()) traced.push_back(m);

    const auto keep_split = split_offsets(layout, keep);
    const long dk = static_cast<long>(keep_split.local_offsets.size());
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(dk, dk);
    if (traced.empty()) {
        for (long r = 0; r < dk; ++r)
            for (long c = 0; c < dk; ++c)
                out(r, c) = mat(keep_split.local_offsets[r], keep_split.local_offsets[c]);
        return out;
    }
    const auto traced_split = split_offsets(layout, traced);
    for (long r = 0; r < dk; ++r)
        for (long c = 0; c < dk; ++c) {
            Complex acc = 0.0;
            for (long t : traced_split.local_offsets)
                acc += mat(keep_split.local_offsets[r] + t, keep_split.local_offsets[c] + t);
            out(r, c) = acc;
        }
    return out;
}

}  // namespace

DensityMatrix partial_trace(const DensityMatrix& rho, const std::vector<int>& keep) {
    check_modes(rho.layout(), keep);
    if (!std::is_sorted(keep.begin(), keep.end()))
        throw InvalidArgument("partial_trace: keep list must be ascending");
    ModeLayout layout;
    for (int m : keep) layout.dims.push_back(rho.layout().dims[m]);
    return DensityMatrix(layout, partial_trace_raw(rho.matrix(), rho.layout(), keep),
                         rho.unnormalized(), 1e-6);
}

PovmEffect::PovmEffect(std::string label_, ModeLayout layout_, Eigen::MatrixXcd matrix_,
                       double eps)
    : label(std::move(label_)), layout(std::move(layout_)), matrix(std::move(matrix_)) {
    if (matrix.rows() != layout.total() || matrix.cols() != layout.total())
        throw InvalidArgument("PovmEffect: matrix shape does not match layout");
    check_hermitian(matrix, 1e-10, "PovmEffect");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(matrix, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -eps || es.eigenvalues().maxCoeff() > 1.0 + eps)
        throw InvalidState("PovmEffect '" + label + "': spectrum outside [0, 1]");
}

ConditionResult condition(const DensityMatrix& rho, const PovmEffect& effect,
                          const std::vector<int>& modes, const NumericsConfig& cfg) {
    check_modes(rho.layout(), modes);
    if (modes.size() >= static_cast<std::size_t>(rho.layout().modes()))
        throw InvalidArgument("condition: must leave at least one unmeasured mode");
    for (std::size_t k = 0; k < modes.size(); ++k)
        if (rho.layout().dims[modes[k]] != effect.layout.dims[k])
            throw InvalidArgument("condition: effect dims do not match measured modes");

    const Eigen::MatrixXcd e_full = embed_local(effect.matrix, rho.layout(), modes);
    const Eigen::MatrixXcd weighted = rho.matrix() * e_full;

    const Complex tr = weighted.trace();
    if (std::abs(tr.imag()) > 1e-12 * std::max(1.0, std::abs(tr)))
        throw NumericalInconsistency("condition: outcome probability has imaginary part " +
                                     std::to_string(tr.imag()));
    const double p = tr.real();
    if (p < cfg.prob_floor)
        throw ZeroProbability("condition: outcome '" + effect.label + "' probability " +
                              std::to_string(p) + " below floor");

    std::vector<int> keep;
    for (int m = 0; m < rho.layout().modes(); ++m)
        if (std::find(modes.begin(), modes.end(), m) == modes.end()) keep.push_back(m);
    ModeLayout out_layout;
    for (int m : keep) out_layout.dims.push_back(rho.layout().dims[m]);

    Eigen::MatrixXcd reduced = partial_trace_raw(weighted, rho.layout(), keep);
    // The product rho*E is not Hermitian, but its trace over the measured
    // factor is; symmetrize away the roundoff before validating.
    reduced = 0.5 * (reduced + reduced.adjoint().eval());
    return {DensityMatrix(out_layout, std::move(reduced), true, 1e-6), p};
}

// ---------- moments and occupations ----------

namespace {

Eigen::VectorXcd apply_annihilation(const Eigen::VectorXcd& amp, const ModeLayout& layout,
                                    int mode) {
    const auto strides = layout_strides(layout);
    const int d = layout.dims[mode];
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(amp.size());
    for (long i = 0; i < amp.size(); ++i) {
        const int digit = static_cast<int>((i / strides[mode]) % d);
        if (digit >= 1) out(i - strides[mode]) = std::sqrt(static_cast<double>(digit)) * amp(i);
    }
    return out;
}

}  // namespace

LadderMoments ladder_moments(const PureStateVector& psi) {
    const int n = psi.layout().modes();
    const auto& amp = psi.amplitudes();
    std::vector<Eigen::VectorXcd> a_psi(n);
    for (int i = 0; i < n; ++i) a_psi[i] = apply_annihilation(amp, psi.layout(), i);

    LadderMoments m;
    m.mean_a.resize(n);
    m.aa.resize(n, n);
    m.adag_a.resize(n, n);
    for (int i = 0; i < n; ++i) {
        m.mean_a(i) = amp.dot(a_psi[i]);  // Eigen dot conjugates the left argument
        for (int j = 0; j < n; ++j) {
            m.adag_a(i, j) = a_psi[i].dot(a_psi[j]);
            m.aa(i, j) = amp.dot(apply_annihilation(a_psi[j], psi.layout(), i));
        }
    }
    return m;
}

LadderMoments ladder_moments(const DensityMatrix& rho) {
    const int n = rho.layout().modes();
    std::vector<Eigen::MatrixXcd> a(n);
    for (int i = 0; i < n; ++i)
        a[i] = embed_local(ladder(rho.layout().dims[i]), rho.layout(), {i});

    LadderMoments m;
    m.mean_a.resize(n);
    m.aa.resize(n, n);
    m.adag_a.resize(n, n);
    for (int i = 0; i < n; ++i) {
        m.mean_a(i) = (rho.matrix() * a[i]).trace();
        for (int j = 0; j < n; ++j) {
            m.aa(i, j) = (rho.matrix() * a[i] * a[j]).trace();
            m.adag_a(i, j) = (rho.matrix() * a[i].adjoint() * a[j]).trace();
        }
    }
    return m;
}

namespace {

std::vector<std::vector<double>> marginal_populations(const Eigen::VectorXd& population,
                                                      const ModeLayout& layout) {
    const auto strides = layout_strides(layout);
    std::vector<std::vector<double>> marg(layout.modes());
    for (int m = 0; m < layout.modes(); ++m) marg[m].assign(layout.dims[m], 0.0);
    for (long i = 0; i < population.size(); ++i)
        for (int m = 0; m < layout.modes(); ++m)
            marg[m][(i / strides[m]) % layout.dims[m]] += population(i);
    return marg;
}

std::vector<double> occupation_from_marginals(const std::vector<std::vector<double>>& marg) {
    std::vector<double> occ(marg.size(), 0.0);
    for (std::size_t m = 0; m < marg.size(); ++m)
        for (std::size_t k = 0; k < marg[m].size(); ++k) occ[m] += k * marg[m][k];
    return occ;
}

std::vector<int> dims_from_marginals(const std::vector<std::vector<double>>& marg,
                                     double tail_mass) {
    std::vector<int> dims(marg.size(), 1);
    for (std::size_t m = 0; m < marg.size(); ++m) {
        double tail = 0.0;
        int d = 1;
        for (int k = static_cast<int>(marg[m].size()); k >= 1; --k) {
            tail += marg[m][k - 1];
            if (tail > tail_mass) {
                d = k;
                break;
            }
        }
        dims[m] = d;
    }
    return dims;
}

}  // namespace

std::vector<double> mode_occupation(const PureStateVector& psi) {
    return occupation_from_marginals(
        marginal_populations(psi.amplitudes().cwiseAbs2(), psi.layout()));
}

std::vector<double> mode_occupation(const DensityMatrix& rho) {
    return occupation_from_marginals(
        marginal_populations(rho.matrix().diagonal().real(), rho.layout()));
}

std::vector<int> occupied_dims(const PureStateVector& psi, double tail_mass) {
    return dims_from_marginals(marginal_populations(psi.amplitudes().cwiseAbs2(), psi.layout()),
                               tail_mass);
}

std::vector<int> occupied_dims(const DensityMatrix& rho, double tail_mass) {
    return dims_from_marginals(
        marginal_populations(rho.matrix().diagonal().real(), rho.layout()), tail_mass);
}

Complex overlap(const PureStateVector& a, const PureStateVector& b) {
    if (!(a.layout() == b.layout())) throw InvalidArgument("overlap: layouts differ");
    return a.amplitudes().dot(b.amplitudes());
}

DensityMatrix mix(const std::vector<std::pair<double, DensityMatrix>>& parts) {
    if (parts.empty()) throw InvalidArgument("mix: need at least one component");
    double wsum = 0.0;
    for (const auto& [w, dm] : parts) {
        if (w < 0.0) throw InvalidArgument("mix: negative weight");
        if (!(dm.layout() == parts.front().second.layout()))
            throw InvalidArgument("mix: layouts differ");
        wsum += w;
    }
    if (std::abs(wsum - 1.0) > 1e-10) throw InvalidArgument("mix: weights must sum to 1");
    Eigen::MatrixXcd acc =
        Eigen::MatrixXcd::Zero(parts.front().second.matrix().rows(),
                               parts.front().second.matrix().cols());
    for (const auto& [w, dm] : parts) acc += w * dm.matrix();
    return DensityMatrix(parts.front().second.layout(), std::move(acc), false, 1e-6);
}

}  // namespace wigneg
