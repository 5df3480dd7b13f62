#include "msdrec/error.hpp"

namespace msdrec {

std::string_view error_name(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::IoError: return "IoError";
        case ErrorKind::ParseError: return "ParseError";
        case ErrorKind::DuplicateTrackId: return "DuplicateTrackId";
        case ErrorKind::SchemaError: return "SchemaError";
        case ErrorKind::EmptyDataset: return "EmptyDataset";
        case ErrorKind::ConfigError: return "ConfigError";
        case ErrorKind::AllFeaturesDropped: return "AllFeaturesDropped";
        case ErrorKind::DegenerateFeature: return "DegenerateFeature";
        case ErrorKind::TooFewPoints: return "TooFewPoints";
        case ErrorKind::InvalidConfig: return "InvalidConfig";
        case ErrorKind::SchemaMismatch: return "SchemaMismatch";
        case ErrorKind::SingleCluster: return "SingleCluster";
        case ErrorKind::PlanError: return "PlanError";
        case ErrorKind::UnknownCluster: return "UnknownCluster";
        case ErrorKind::UnknownTrack: return "UnknownTrack";
        case ErrorKind::InvalidArgument: return "InvalidArgument";
    }
    return "Error";
}

namespace {

std::string format_message(ErrorKind kind, const std::string& message, std::optional<std::size_t> line) {
    std::string out(error_name(kind));
    if (line) {
        out += " (line " + std::to_string(*line) + ")";
    }
    out += ": ";
    out += message;
    return out;
}

}  // namespace

Error::Error(ErrorKind kind, const std::string& message, std::optional<std::size_t> line)
    : std::runtime_error(format_message(kind, message, line)), kind_(kind), line_(line) {}

bool Error::is_config_error() const noexcept {
    return kind_ == ErrorKind::ConfigError || kind_ == ErrorKind::InvalidConfig || kind_ == ErrorKind::PlanError;
}

}  // namespace msdrec
