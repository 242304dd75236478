#include "bpre/error.hpp"

namespace bpre {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::NegativeMass: return "NegativeMass";
        case ErrorKind::BadNormalization: return "BadNormalization";
        case ErrorKind::BadParams: return "BadParams";
        case ErrorKind::DomainError: return "DomainError";
        case ErrorKind::ZeroMean: return "ZeroMean";
        case ErrorKind::TruncationTooSmall: return "TruncationTooSmall";
        case ErrorKind::DimensionMismatch: return "DimensionMismatch";
        case ErrorKind::ExtinctionMass: return "ExtinctionMass";
        case ErrorKind::ExtinctionPossible: return "ExtinctionPossible";
        case ErrorKind::NotSupercritical: return "NotSupercritical";
        case ErrorKind::NotFractionalLinear: return "NotFractionalLinear";
        case ErrorKind::ParseError: return "ParseError";
        case ErrorKind::UnknownSuite: return "UnknownSuite";
        case ErrorKind::DegenerateGamma: return "DegenerateGamma";
        case ErrorKind::Degenerate: return "Degenerate";
        case ErrorKind::NoRoot: return "NoRoot";
    }
    return "Unknown";
}

bool is_numerical(ErrorKind kind) noexcept {
    return kind == ErrorKind::DegenerateGamma || kind == ErrorKind::Degenerate ||
           kind == ErrorKind::NoRoot;
}

}  // namespace bpre
