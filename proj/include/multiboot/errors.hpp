#ifndef MULTIBOOT_ERRORS_HPP
#define MULTIBOOT_ERRORS_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace multiboot {

enum class ErrorKind {
    // Input / data-format problems.
    MissingCell,
    DuplicateCell,
    UnknownExample,
    NonFiniteValue,
    ExampleMismatch,
    LabelMismatch,
    SeedMismatch,
    LengthMismatch,
    IndexOutOfRange,
    NoGroups,
    InvalidLabels,
    InvalidArgument,
    ParseError,
    // Statistical infeasibility.
    DegenerateVariance,
    InsufficientRuns,
    InstanceTooLarge,
    EmptySamples
};

inline constexpr std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::MissingCell: return "MissingCell";
        case ErrorKind::DuplicateCell: return "DuplicateCell";
        case ErrorKind::UnknownExample: return "UnknownExample";
        case ErrorKind::NonFiniteValue: return "NonFiniteValue";
        case ErrorKind::ExampleMismatch: return "ExampleMismatch";
        case ErrorKind::LabelMismatch: return "LabelMismatch";
        case ErrorKind::SeedMismatch: return "SeedMismatch";
        case ErrorKind::LengthMismatch: return "LengthMismatch";
        case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
        case ErrorKind::NoGroups: return "NoGroups";
        case ErrorKind::InvalidLabels: return "InvalidLabels";
        case ErrorKind::InvalidArgument: return "InvalidArgument";
        case ErrorKind::ParseError: return "ParseError";
        case ErrorKind::DegenerateVariance: return "DegenerateVariance";
        case ErrorKind::InsufficientRuns: return "InsufficientRuns";
        case ErrorKind::InstanceTooLarge: return "InstanceTooLarge";
        case ErrorKind::EmptySamples: return "EmptySamples";
    }
    return "Unknown";
}

/// True for errors that mean the method cannot be applied to otherwise
/// well-formed data (CLI exit code 3); false for data/format bugs (exit 2).
inline constexpr bool is_statistical(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::DegenerateVariance:
        case ErrorKind::InsufficientRuns:
        case ErrorKind::InstanceTooLarge:
        case ErrorKind::EmptySamples:
            return true;
        default:
            return false;
    }
}

/// Single exception type for the library. `detail()` holds the offending
/// identifier (seed, example id, line number...) when there is one.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string message, std::string detail = {})
        : std::runtime_error(std::string(to_string(kind)) + ": " + message),
          kind_(kind), detail_(std::move(detail)) {}

    ErrorKind kind() const noexcept { return kind_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    ErrorKind kind_;
    std::string detail_;
};

} // namespace multiboot

#endif
