#pragma once

#include <string>
#include <string_view>

#include "json.hpp"
#include "msdrec/features.hpp"
#include "msdrec/ingest.hpp"
#include "msdrec/recommend.hpp"
#include "msdrec/types.hpp"

namespace msdrec {

using Json = nlohmann::json;

/// Compact JSON with sorted object keys and shortest round-trip decimal
/// doubles. Two equal values always dump to identical bytes.
std::string canonical_dump(const Json& value);

/// Parses JSON text, mapping parser failures to Error(ParseError).
Json parse_json(std::string_view text, std::optional<std::size_t> line = std::nullopt);

std::string fnv1a_hex(std::string_view bytes);

Json to_json(const SegmentSequence& seq);
SegmentSequence segments_from_json(const Json& j);

/// The JSONL dataset record layout. Text features share the `features`
/// object with numeric ones and are told apart by JSON type.
Json to_json(const TrackRecord& track);
/// Parses, normalizes and validates one record.
TrackRecord track_from_json(const Json& j);

Json to_json(const SelectionSummary& summary);
SelectionSummary selection_summary_from_json(const Json& j);

Json to_json(const FeatureSchema& schema);
FeatureSchema schema_from_json(const Json& j);

Json to_json(const FeatureMatrix& matrix);
FeatureMatrix feature_matrix_from_json(const Json& j);

Json to_json(const KMeansModel& model);
KMeansModel model_from_json(const Json& j);

Json to_json(const ClusterIndex& index);
ClusterIndex cluster_index_from_json(const Json& j);

Json to_json(const FeatureStats& stats);
FeatureStats feature_stats_from_json(const Json& j);

Json to_json(const SelectionReport& report);
SelectionReport selection_report_from_json(const Json& j);

Json to_json(const Recommendation& rec);
Recommendation recommendation_from_json(const Json& j);

/// Content hash of the model's canonical JSON.
std::string model_id(const KMeansModel& model);

}  // namespace msdrec
