#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace prymlab {

enum class Errc {
    NotSymmetric,
    NotPositiveDefinite,
    RadiusCapExceeded,
    ZeroVector,
    NoConvergence,
    NotSquarefree,
    RamifiedAtZero,
    BadDegree,
    QuadratureNoConvergence,
    SingularAPeriods,
    PathThroughBranchPoint,
    DegenerateMarkedPoints,
    NearDivisor,
    DegenerateQuadruple,
    ZeroCoefficient,
    InconsistentSystem,
    DegenerateConfiguration,
    WindowExhausted,
    CompatibilityFailure,
    NonInvertibleLeading,
    TruncationTooShallow,
    RankDeficientFit,
    ConfigError,
    IoError,
};

inline std::string_view errc_name(Errc c) {
    switch (c) {
    case Errc::NotSymmetric: return "NotSymmetric";
    case Errc::NotPositiveDefinite: return "NotPositiveDefinite";
    case Errc::RadiusCapExceeded: return "RadiusCapExceeded";
    case Errc::ZeroVector: return "ZeroVector";
    case Errc::NoConvergence: return "NoConvergence";
    case Errc::NotSquarefree: return "NotSquarefree";
    case Errc::RamifiedAtZero: return "RamifiedAtZero";
    case Errc::BadDegree: return "BadDegree";
    case Errc::QuadratureNoConvergence: return "QuadratureNoConvergence";
    case Errc::SingularAPeriods: return "SingularAPeriods";
    case Errc::PathThroughBranchPoint: return "PathThroughBranchPoint";
    case Errc::DegenerateMarkedPoints: return "DegenerateMarkedPoints";
    case Errc::NearDivisor: return "NearDivisor";
    case Errc::DegenerateQuadruple: return "DegenerateQuadruple";
    case Errc::ZeroCoefficient: return "ZeroCoefficient";
    case Errc::InconsistentSystem: return "InconsistentSystem";
    case Errc::DegenerateConfiguration: return "DegenerateConfiguration";
    case Errc::WindowExhausted: return "WindowExhausted";
    case Errc::CompatibilityFailure: return "CompatibilityFailure";
    case Errc::NonInvertibleLeading: return "NonInvertibleLeading";
    case Errc::TruncationTooShallow: return "TruncationTooShallow";
    case Errc::RankDeficientFit: return "RankDeficientFit";
    case Errc::ConfigError: return "ConfigError";
    case Errc::IoError: return "IoError";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    Errc code() const noexcept { return code_; }

    // Numeric failures map to exit code 3, configuration/IO problems to 2.
    bool is_config() const noexcept { return code_ == Errc::ConfigError || code_ == Errc::IoError; }

private:
    Errc code_;
};

} // namespace prymlab
