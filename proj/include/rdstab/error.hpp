#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rdstab {

enum class ErrorCode {
    InvalidParams,
    BranchUnsupported,
    RootScanExhausted,
    LiftingDegenerate,
    PolesNotDistinct,
    PolesNotConjugateClosed,
    PlacementIllConditioned,
    ConstraintViolated,
    InvalidScenario,
    DelayOutOfBounds,
    NonFiniteState,
    ConfigError,
};

constexpr std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidParams: return "InvalidParams";
        case ErrorCode::BranchUnsupported: return "BranchUnsupported";
        case ErrorCode::RootScanExhausted: return "RootScanExhausted";
        case ErrorCode::LiftingDegenerate: return "LiftingDegenerate";
        case ErrorCode::PolesNotDistinct: return "PolesNotDistinct";
        case ErrorCode::PolesNotConjugateClosed: return "PolesNotConjugateClosed";
        case ErrorCode::PlacementIllConditioned: return "PlacementIllConditioned";
        case ErrorCode::ConstraintViolated: return "ConstraintViolated";
        case ErrorCode::InvalidScenario: return "InvalidScenario";
        case ErrorCode::DelayOutOfBounds: return "DelayOutOfBounds";
        case ErrorCode::NonFiniteState: return "NonFiniteState";
        case ErrorCode::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

/// True for errors caused by bad user input (as opposed to numerical failure).
constexpr bool is_validation_error(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidParams:
        case ErrorCode::BranchUnsupported:
        case ErrorCode::PolesNotDistinct:
        case ErrorCode::PolesNotConjugateClosed:
        case ErrorCode::ConstraintViolated:
        case ErrorCode::InvalidScenario:
        case ErrorCode::DelayOutOfBounds:
        case ErrorCode::ConfigError:
            return true;
        default:
            return false;
    }
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), message_(what) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }
    /// The message without the error-code prefix.
    [[nodiscard]] const std::string& message() const noexcept { return message_; }

private:
    ErrorCode code_;
    std::string message_;
};

}  // namespace rdstab
