#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace msdrec {

enum class ErrorKind {
    IoError,
    ParseError,
    DuplicateTrackId,
    SchemaError,
    EmptyDataset,
    ConfigError,
    AllFeaturesDropped,
    DegenerateFeature,
    TooFewPoints,
    InvalidConfig,
    SchemaMismatch,
    SingleCluster,
    PlanError,
    UnknownCluster,
    UnknownTrack,
    InvalidArgument,
};

std::string_view error_name(ErrorKind kind) noexcept;

/// Every failure raised by the library. `kind()` identifies the error class
/// by the names used in the CLI's stderr messages.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message, std::optional<std::size_t> line = std::nullopt);

    ErrorKind kind() const noexcept { return kind_; }
    std::string_view name() const noexcept { return error_name(kind_); }

    /// 1-based source line for parse errors.
    std::optional<std::size_t> line() const noexcept { return line_; }

    /// True for errors caused by bad user configuration (CLI exit code 2).
    bool is_config_error() const noexcept;

private:
    ErrorKind kind_;
    std::optional<std::size_t> line_;
};

}  // namespace msdrec
