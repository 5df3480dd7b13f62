#include "msdrec/types.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <set>
#include <unordered_set>

#include "msdrec/error.hpp"

namespace msdrec {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        throw Error(ErrorKind::InvalidArgument, "matrix data size does not match its shape");
    }
}

double squared_distance(std::span<const double> a, std::span<const double> b) noexcept {
    double sum = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double diff = a[j] - b[j];
        sum += diff * diff;
    }
    return sum;
}

std::optional<double> TrackRecord::feature(std::string_view name) const {
    auto it = features.find(std::string(name));
    if (it == features.end()) return std::nullopt;
    return it->second;
}

bool is_valid_track_id(std::string_view id) noexcept {
    if (id.empty()) return false;
    return std::all_of(id.begin(), id.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
    });
}

namespace {

std::string lowercase(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

template <typename Pred>
void dedupe_in_place(std::vector<std::string>& items, Pred drop) {
    std::unordered_set<std::string> seen;
    std::vector<std::string> kept;
    kept.reserve(items.size());
    for (auto& item : items) {
        if (drop(item) || !seen.insert(item).second) continue;
        kept.push_back(std::move(item));
    }
    items = std::move(kept);
}

}  // namespace

void normalize_track(TrackRecord& track) {
    for (auto& term : track.artist_terms) term = lowercase(term);
    dedupe_in_place(track.artist_terms, [](const std::string&) { return false; });
    dedupe_in_place(track.similar_artists, [&](const std::string& a) { return a == track.artist_id; });
}

void validate_track(const TrackRecord& track) {
    auto fail = [](const std::string& what) { throw Error(ErrorKind::InvalidArgument, what); };

    if (!is_valid_track_id(track.track_id)) {
        fail("track_id '" + track.track_id + "' must match [A-Za-z0-9_-]+");
    }
    if (track.artist_id.empty()) fail("track " + track.track_id + ": artist_id is empty");

    std::set<std::string> terms;
    for (const auto& term : track.artist_terms) {
        if (term != lowercase(term)) fail("track " + track.track_id + ": artist term '" + term + "' is not lowercase");
        if (!terms.insert(term).second) fail("track " + track.track_id + ": duplicate artist term '" + term + "'");
    }
    std::set<std::string> similar;
    for (const auto& artist : track.similar_artists) {
        if (artist == track.artist_id) fail("track " + track.track_id + ": similar_artists contains its own artist");
        if (!similar.insert(artist).second) fail("track " + track.track_id + ": duplicate similar artist '" + artist + "'");
    }
    for (const auto& [name, value] : track.features) {
        if (name.empty()) fail("track " + track.track_id + ": empty feature name");
        if (value && !std::isfinite(*value)) fail("track " + track.track_id + ": feature '" + name + "' is not finite");
        if (track.text_features.contains(name)) {
            fail("track " + track.track_id + ": feature '" + name + "' is both numeric and text");
        }
    }
    if (track.segments) {
        const auto& seg = *track.segments;
        const std::size_t w = seg.width();
        for (const auto& step : seg.timbre) {
            if (step.size() != w || w == 0) fail("track " + track.track_id + ": timbre vectors must share a width >= 1");
            for (double v : step) {
                if (!std::isfinite(v)) fail("track " + track.track_id + ": timbre value is not finite");
            }
        }
        if (seg.confidence) {
            if (seg.confidence->size() != seg.timbre.size()) {
                fail("track " + track.track_id + ": confidence length differs from timbre length");
            }
            for (double c : *seg.confidence) {
                if (!(c >= 0.0 && c <= 1.0)) fail("track " + track.track_id + ": confidence outside [0,1]");
            }
        }
    }
}

std::string_view drop_reason_name(DropReason reason) noexcept {
    switch (reason) {
        case DropReason::ZeroVariance: return "zero_variance";
        case DropReason::Sparse: return "sparse";
        case DropReason::Manual: return "manual";
        case DropReason::NonNumeric: return "non_numeric";
    }
    return "unknown";
}

std::optional<DropReason> parse_drop_reason(std::string_view name) noexcept {
    for (auto r : {DropReason::ZeroVariance, DropReason::Sparse, DropReason::Manual, DropReason::NonNumeric}) {
        if (drop_reason_name(r) == name) return r;
    }
    return std::nullopt;
}

FeatureSchema make_schema(std::vector<ScaledFeature> features, SelectionSummary provenance) {
    std::sort(features.begin(), features.end(),
              [](const ScaledFeature& a, const ScaledFeature& b) { return a.name < b.name; });
    FeatureSchema schema;
    schema.provenance = provenance;
    for (auto& f : features) {
        schema.feature_names.push_back(std::move(f.name));
        schema.scaler_mean.push_back(f.mean);
        schema.scaler_std.push_back(f.std);
    }
    validate_schema(schema);
    return schema;
}

void validate_schema(const FeatureSchema& schema) {
    const std::size_t d = schema.feature_names.size();
    if (d == 0) throw Error(ErrorKind::SchemaError, "schema has no features");
    if (schema.scaler_mean.size() != d || schema.scaler_std.size() != d) {
        throw Error(ErrorKind::SchemaError, "scaler vectors do not match the feature count");
    }
    if (!std::is_sorted(schema.feature_names.begin(), schema.feature_names.end())) {
        throw Error(ErrorKind::SchemaError, "schema feature names are not sorted");
    }
    if (std::adjacent_find(schema.feature_names.begin(), schema.feature_names.end()) != schema.feature_names.end()) {
        throw Error(ErrorKind::SchemaError, "schema has duplicate feature names");
    }
    for (std::size_t j = 0; j < d; ++j) {
        if (!std::isfinite(schema.scaler_mean[j]) || !std::isfinite(schema.scaler_std[j]) ||
            !(schema.scaler_std[j] > 0.0)) {
            throw Error(ErrorKind::SchemaError, "invalid scaler parameters for '" + schema.feature_names[j] + "'");
        }
    }
}

bool same_schema(const SchemaPtr& a, const SchemaPtr& b) noexcept {
    if (a == b) return true;
    if (!a || !b) return false;
    return a->feature_names == b->feature_names && a->scaler_mean == b->scaler_mean &&
           a->scaler_std == b->scaler_std;
}

bool operator==(const KMeansModel& a, const KMeansModel& b) {
    const bool schemas_equal = (a.schema == b.schema) || (a.schema && b.schema && *a.schema == *b.schema);
    return a.k == b.k && a.centroids == b.centroids && schemas_equal && a.inertia == b.inertia &&
           a.iterations_run == b.iterations_run && a.seed == b.seed && a.converged == b.converged;
}

}  // namespace msdrec
