#include "pnft/common.hpp"

namespace pnft {

const char* error_name(ErrorCode code) {
    switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidGenus: return "InvalidGenus";
    case ErrorCode::InvalidSpectrum: return "InvalidSpectrum";
    case ErrorCode::CoincidentBranchPoints: return "CoincidentBranchPoints";
    case ErrorCode::CutsIntersect: return "CutsIntersect";
    case ErrorCode::QuadratureNotConverged: return "QuadratureNotConverged";
    case ErrorCode::IllConditionedPeriods: return "IllConditionedPeriods";
    case ErrorCode::TruncationOverflow: return "TruncationOverflow";
    case ErrorCode::DenominatorNearZero: return "DenominatorNearZero";
    case ErrorCode::Incommensurate: return "Incommensurate";
    case ErrorCode::AmbiguousDrift: return "AmbiguousDrift";
    case ErrorCode::InsufficientRoots: return "InsufficientRoots";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::PhaseUndefined: return "PhaseUndefined";
    case ErrorCode::UnitMismatch: return "UnitMismatch";
    case ErrorCode::StepTooCoarse: return "StepTooCoarse";
    case ErrorCode::UnknownLabel: return "UnknownLabel";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::ParseError: return "ParseError";
    }
    return "Unknown";
}

}  // namespace pnft
