#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mcdiff {

enum class ErrorKind {
    NonPositiveTemperature,
    NonPositiveDensity,
    NegativeFraction,
    FractionSumOutOfRange,
    ZeroFraction,
    DimensionMismatch,
    SingularD0,
    KernelMismatch,
    NotSymmetric,
    PreconditionViolated,
    AsymmetricFriction,
    BinaryMixture,
    MissingStructure,
    NonPositiveDiffusivity,
    DegenerateTernary,
    InvalidParameter,
    StabilityViolation,
    InvariantBreach,
};

constexpr std::string_view to_string(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::NonPositiveTemperature: return "NonPositiveTemperature";
    case ErrorKind::NonPositiveDensity: return "NonPositiveDensity";
    case ErrorKind::NegativeFraction: return "NegativeFraction";
    case ErrorKind::FractionSumOutOfRange: return "FractionSumOutOfRange";
    case ErrorKind::ZeroFraction: return "ZeroFraction";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::SingularD0: return "SingularD0";
    case ErrorKind::KernelMismatch: return "KernelMismatch";
    case ErrorKind::NotSymmetric: return "NotSymmetric";
    case ErrorKind::PreconditionViolated: return "PreconditionViolated";
    case ErrorKind::AsymmetricFriction: return "AsymmetricFriction";
    case ErrorKind::BinaryMixture: return "BinaryMixture";
    case ErrorKind::MissingStructure: return "MissingStructure";
    case ErrorKind::NonPositiveDiffusivity: return "NonPositiveDiffusivity";
    case ErrorKind::DegenerateTernary: return "DegenerateTernary";
    case ErrorKind::InvalidParameter: return "InvalidParameter";
    case ErrorKind::StabilityViolation: return "StabilityViolation";
    case ErrorKind::InvariantBreach: return "InvariantBreach";
    }
    return "Unknown";
}

/**
 * @brief Domain error carrying a machine-readable kind.
 */
class Error : public std::invalid_argument {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::invalid_argument(std::string(to_string(kind)) + ": " + what), kind_(kind)
    {
    }

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

} // namespace mcdiff
