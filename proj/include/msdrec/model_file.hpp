#pragma once

#include <filesystem>
#include <string>

#include "msdrec/features.hpp"
#include "msdrec/serialize.hpp"
#include "msdrec/types.hpp"

namespace msdrec {

inline constexpr int kModelFormatVersion = 1;

/// On-disk trained model: the clustering, the feature selection that produced
/// its schema, and a creation timestamp.
struct ModelFile {
    int format_version = kModelFormatVersion;
    KMeansModel model;
    SelectionReport selection_report;
    std::string created_at;
};

Json to_json(const ModelFile& file);
ModelFile model_file_from_json(const Json& j);

/// Canonical JSON plus a trailing newline.
void save_model_file(const std::filesystem::path& path, const ModelFile& file);
ModelFile load_model_file(const std::filesystem::path& path);

/// Current UTC time as `YYYY-MM-DDTHH:MM:SSZ`.
std::string utc_timestamp_now();

}  // namespace msdrec
