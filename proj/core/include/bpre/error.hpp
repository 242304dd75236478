#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bpre {

enum class ErrorKind {
    // input / validation
    NegativeMass,
    BadNormalization,
    BadParams,
    DomainError,
    ZeroMean,
    TruncationTooSmall,
    DimensionMismatch,
    ExtinctionMass,
    ExtinctionPossible,
    NotSupercritical,
    NotFractionalLinear,
    ParseError,
    UnknownSuite,
    // numerical
    DegenerateGamma,
    Degenerate,
    NoRoot,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// True for errors caused by bad numerical conditioning rather than bad input.
bool is_numerical(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace bpre
