#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "msdrec/ingest.hpp"
#include "msdrec/types.hpp"

namespace msdrec {

struct SelectionConfig {
    double variance_epsilon = 1e-12;
    double max_missing_fraction = 0.5;
    std::vector<std::string> manual_drop;
    std::vector<std::string> manual_keep;
};

void validate_selection_config(const SelectionConfig& config);

struct DroppedFeature {
    std::string feature_name;
    DropReason reason;

    friend bool operator==(const DroppedFeature&, const DroppedFeature&) = default;
};

struct SelectionReport {
    std::vector<std::string> kept;
    std::vector<DroppedFeature> dropped;

    SelectionSummary summary() const;

    friend bool operator==(const SelectionReport&, const SelectionReport&) = default;
};

/// Applies the pruning rules to per-feature statistics. Rule precedence for
/// the recorded reason: manual, non_numeric, sparse, zero_variance. A feature
/// listed in manual_keep survives every automatic rule.
SelectionReport select_features(std::span<const FeatureStats> stats, const SelectionConfig& config);

/// Z-score parameters over the present values of each kept feature.
FeatureSchema fit_scaler(std::span<const TrackRecord> records, std::span<const std::string> kept,
                         SelectionSummary provenance = {});

/// Scaled rows in record order; missing values become 0 (the training mean).
FeatureMatrix build_matrix(std::span<const TrackRecord> records, SchemaPtr schema, unsigned workers = 0);

/// The full preparation chain used by training and staged search:
/// stats, selection, scaler fit and matrix build. Records must already be summarized.
struct PreparedFeatures {
    SelectionReport report;
    FeatureMatrix matrix;
};

PreparedFeatures prepare_features(std::span<const TrackRecord> records, const SelectionConfig& config,
                                  unsigned workers = 0);

}  // namespace msdrec
