#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace pnft {

using Complex = std::complex<double>;
using CVector = std::vector<Complex>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr Complex kI{0.0, 1.0};

enum class ErrorCode {
    InvalidArgument,
    InvalidGenus,
    InvalidSpectrum,
    CoincidentBranchPoints,
    CutsIntersect,
    QuadratureNotConverged,
    IllConditionedPeriods,
    TruncationOverflow,
    DenominatorNearZero,
    Incommensurate,
    AmbiguousDrift,
    InsufficientRoots,
    NoConvergence,
    PhaseUndefined,
    UnitMismatch,
    StepTooCoarse,
    UnknownLabel,
    LengthMismatch,
    ParseError,
};

const char* error_name(ErrorCode code);

// Every failure raised by the library carries one of the codes above so that
// callers (and the CLI exit-code mapping) can branch on the failure class.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(error_name(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace pnft
