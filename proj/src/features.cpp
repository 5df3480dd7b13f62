#include "msdrec/features.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "msdrec/error.hpp"
#include "msdrec/parallel.hpp"

namespace msdrec {

namespace {

constexpr double kMinStd = 1e-9;

}  // namespace

void validate_selection_config(const SelectionConfig& config) {
    if (!(config.variance_epsilon >= 0.0)) {
        throw Error(ErrorKind::ConfigError, "variance_epsilon must be >= 0");
    }
    if (!(config.max_missing_fraction >= 0.0 && config.max_missing_fraction <= 1.0)) {
        throw Error(ErrorKind::ConfigError, "max_missing_fraction must lie in [0, 1]");
    }
    const std::set<std::string> drop(config.manual_drop.begin(), config.manual_drop.end());
    for (const auto& name : config.manual_keep) {
        if (drop.contains(name)) {
            throw Error(ErrorKind::ConfigError, "feature '" + name + "' is both in manual_drop and manual_keep");
        }
    }
}

SelectionSummary SelectionReport::summary() const {
    SelectionSummary s;
    for (const auto& d : dropped) {
        switch (d.reason) {
            case DropReason::ZeroVariance: ++s.zero_variance; break;
            case DropReason::Sparse: ++s.sparse; break;
            case DropReason::Manual: ++s.manual; break;
            case DropReason::NonNumeric: ++s.non_numeric; break;
        }
    }
    return s;
}

SelectionReport select_features(std::span<const FeatureStats> stats, const SelectionConfig& config) {
    validate_selection_config(config);
    if (stats.empty()) throw Error(ErrorKind::EmptyDataset, "no feature statistics to select from");

    const std::set<std::string> drop(config.manual_drop.begin(), config.manual_drop.end());
    const std::set<std::string> keep(config.manual_keep.begin(), config.manual_keep.end());

    SelectionReport report;
    for (const auto& s : stats) {
        const std::size_t total = s.count_present + s.count_missing;
        const double missing_fraction = total ? static_cast<double>(s.count_missing) / static_cast<double>(total) : 1.0;

        std::optional<DropReason> reason;
        if (drop.contains(s.feature_name)) {
            reason = DropReason::Manual;
        } else if (keep.contains(s.feature_name)) {
            reason = std::nullopt;
        } else if (!s.numeric) {
            reason = DropReason::NonNumeric;
        } else if (missing_fraction > config.max_missing_fraction) {
            reason = DropReason::Sparse;
        } else if (s.variance < config.variance_epsilon) {
            reason = DropReason::ZeroVariance;
        }

        if (reason) {
            report.dropped.push_back({s.feature_name, *reason});
        } else {
            report.kept.push_back(s.feature_name);
        }
    }
    std::sort(report.kept.begin(), report.kept.end());
    std::sort(report.dropped.begin(), report.dropped.end(),
              [](const DroppedFeature& a, const DroppedFeature& b) { return a.feature_name < b.feature_name; });
    if (report.kept.empty()) {
        throw Error(ErrorKind::AllFeaturesDropped, "every feature was removed by selection");
    }
    return report;
}

FeatureSchema fit_scaler(std::span<const TrackRecord> records, std::span<const std::string> kept,
                         SelectionSummary provenance) {
    if (kept.empty()) throw Error(ErrorKind::InvalidArgument, "fit_scaler needs at least one feature");
    std::vector<std::string> names(kept.begin(), kept.end());
    std::sort(names.begin(), names.end());
    if (std::adjacent_find(names.begin(), names.end()) != names.end()) {
        throw Error(ErrorKind::InvalidArgument, "duplicate feature in kept list");
    }

    std::vector<RunningStats> acc(names.size());
    for (const auto& r : records) {
        for (std::size_t j = 0; j < names.size(); ++j) {
            auto it = r.features.find(names[j]);
            if (it != r.features.end() && it->second) acc[j].add(*it->second);
        }
    }

    std::vector<ScaledFeature> scaled;
    scaled.reserve(names.size());
    for (std::size_t j = 0; j < names.size(); ++j) {
        const double variance = acc[j].population_variance();
        if (acc[j].count == 0 || !(variance > 0.0)) {
            throw Error(ErrorKind::DegenerateFeature, "feature '" + names[j] + "' has no variance across records");
        }
        scaled.push_back({names[j], acc[j].mean, std::max(std::sqrt(variance), kMinStd)});
    }
    return make_schema(std::move(scaled), provenance);
}

FeatureMatrix build_matrix(std::span<const TrackRecord> records, SchemaPtr schema, unsigned workers) {
    if (!schema) throw Error(ErrorKind::InvalidArgument, "build_matrix needs a schema");
    validate_schema(*schema);
    const std::size_t d = schema->dimension();

    FeatureMatrix m;
    m.schema = schema;
    m.rows = Matrix(records.size(), d);
    m.row_ids.reserve(records.size());
    for (const auto& r : records) m.row_ids.push_back(r.track_id);

    parallel::for_each_chunk(records.size(), workers, [&](std::size_t, std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            auto row = m.rows.row(i);
            const auto& features = records[i].features;
            for (std::size_t j = 0; j < d; ++j) {
                auto it = features.find(schema->feature_names[j]);
                row[j] = (it != features.end() && it->second)
                             ? (*it->second - schema->scaler_mean[j]) / schema->scaler_std[j]
                             : 0.0;
            }
        }
    });
    return m;
}

PreparedFeatures prepare_features(std::span<const TrackRecord> records, const SelectionConfig& config,
                                  unsigned workers) {
    PreparedFeatures out;
    const auto stats = compute_stats(records, workers);
    out.report = select_features(stats, config);
    auto schema = std::make_shared<const FeatureSchema>(fit_scaler(records, out.report.kept, out.report.summary()));
    out.matrix = build_matrix(records, std::move(schema), workers);
    return out;
}

}  // namespace msdrec
