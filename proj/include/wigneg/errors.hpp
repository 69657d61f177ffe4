#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace wigneg {

// Base class for every error thrown by this library.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Bad user input: malformed spec strings, out-of-range parameters, layout mismatches.
struct InvalidArgument : Error {
    explicit InvalidArgument(const std::string& what) : Error(what) {}
};

// A state failed a physicality check (norm, Hermiticity, positivity, trace).
struct InvalidState : Error {
    explicit InvalidState(const std::string& what) : Error(what) {}
};

// A family parameter combination that names no state (e.g. photon subtraction
// from vacuum, which annihilates the vector).
struct UndefinedState : Error {
    explicit UndefinedState(const std::string& what) : Error(what) {}
};

// An operation pushed probability mass past the Fock cutoff beyond the
// configured budget.  `suggested_dims` is a per-mode dimension that would have
// kept the leaked mass within budget, so callers can rebuild and retry.
struct TruncationOverflow : Error {
    TruncationOverflow(const std::string& what, std::vector<int> suggested)
        : Error(what), suggested_dims(std::move(suggested)) {}
    std::vector<int> suggested_dims;
};

// Conditioning produced an outcome whose probability sits below the floor.
struct ZeroProbability : Error {
    explicit ZeroProbability(const std::string& what) : Error(what) {}
};

// An iterative scheme (grid refinement, root bracketing, dim doubling) ran out
// of budget before meeting its tolerance.  Carries the last two iterates.
struct ConvergenceFailure : Error {
    ConvergenceFailure(const std::string& what, double previous, double last)
        : Error(what), previous_value(previous), last_value(last) {}
    double previous_value;
    double last_value;
};

// An internal cross-check failed (e.g. a quantity that must be real carries a
// non-negligible imaginary part).  Indicates a bug or a severely invalid input.
struct NumericalInconsistency : Error {
    explicit NumericalInconsistency(const std::string& what) : Error(what) {}
};

// A quadrature/outcome domain was capped before the captured probability
// reached its coverage requirement.
struct DomainTooSmall : Error {
    explicit DomainTooSmall(const std::string& what) : Error(what) {}
};

// A ratio whose denominator vanishes (e.g. efficiency of a protocol whose
// input has no Wigner negativity).
struct DivisionUndefined : Error {
    explicit DivisionUndefined(const std::string& what) : Error(what) {}
};

}  // namespace wigneg
