#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace msdrec {

/// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return data_.empty(); }

    std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const noexcept { return {data_.data() + i * cols_, cols_}; }

    double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

    const std::vector<double>& data() const noexcept { return data_; }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

double squared_distance(std::span<const double> a, std::span<const double> b) noexcept;

/// Per-time-step audio analysis vectors of one track (12-wide timbre for MSD-shaped data).
struct SegmentSequence {
    std::vector<std::vector<double>> timbre;
    std::optional<std::vector<double>> confidence;

    /// Width of the timbre vectors; 0 for an empty sequence.
    std::size_t width() const noexcept { return timbre.empty() ? 0 : timbre.front().size(); }

    friend bool operator==(const SegmentSequence&, const SegmentSequence&) = default;
};

struct TrackRecord {
    std::string track_id;
    std::string artist_id;
    std::string artist_name;
    std::string title;
    std::vector<std::string> artist_terms;
    std::vector<std::string> similar_artists;
    /// Numeric features. A key mapped to nullopt was observed with a null value;
    /// both that and an absent key mean "missing".
    std::map<std::string, std::optional<double>> features;
    /// String-valued feature columns. Never used for clustering.
    std::map<std::string, std::string> text_features;
    std::optional<SegmentSequence> segments;

    std::optional<double> feature(std::string_view name) const;

    friend bool operator==(const TrackRecord&, const TrackRecord&) = default;
};

bool is_valid_track_id(std::string_view id) noexcept;

/// Lowercases and deduplicates artist_terms, deduplicates similar_artists and
/// removes the track's own artist from them. First occurrence wins.
void normalize_track(TrackRecord& track);

/// Throws Error(InvalidArgument) describing the first violated invariant.
void validate_track(const TrackRecord& track);

enum class DropReason { ZeroVariance, Sparse, Manual, NonNumeric };

std::string_view drop_reason_name(DropReason reason) noexcept;
std::optional<DropReason> parse_drop_reason(std::string_view name) noexcept;

/// Counts of features removed by each selection rule.
struct SelectionSummary {
    std::size_t zero_variance = 0;
    std::size_t sparse = 0;
    std::size_t manual = 0;
    std::size_t non_numeric = 0;

    friend bool operator==(const SelectionSummary&, const SelectionSummary&) = default;
};

/// Ordered numeric features plus z-score parameters: the contract between
/// training and inference. Build with make_schema so names end up sorted.
struct FeatureSchema {
    std::vector<std::string> feature_names;
    std::vector<double> scaler_mean;
    std::vector<double> scaler_std;
    SelectionSummary provenance;

    std::size_t dimension() const noexcept { return feature_names.size(); }

    friend bool operator==(const FeatureSchema&, const FeatureSchema&) = default;
};

struct ScaledFeature {
    std::string name;
    double mean = 0.0;
    double std = 1.0;
};

/// Sorts features by name and validates the schema invariants.
FeatureSchema make_schema(std::vector<ScaledFeature> features, SelectionSummary provenance = {});

void validate_schema(const FeatureSchema& schema);

using SchemaPtr = std::shared_ptr<const FeatureSchema>;

struct FeatureMatrix {
    SchemaPtr schema;
    Matrix rows;
    std::vector<std::string> row_ids;

    std::size_t size() const noexcept { return rows.rows(); }
    std::size_t dimension() const noexcept { return rows.cols(); }
};

struct KMeansModel {
    std::size_t k = 0;
    Matrix centroids;
    SchemaPtr schema;
    double inertia = 0.0;
    std::size_t iterations_run = 0;
    std::uint64_t seed = 0;
    bool converged = false;
};

bool operator==(const KMeansModel& a, const KMeansModel& b);

/// True when both schemas describe the same feature space.
bool same_schema(const SchemaPtr& a, const SchemaPtr& b) noexcept;

struct ClusterIndex {
    std::string model_id;
    std::map<std::string, std::size_t> assignments;
    std::vector<std::vector<std::string>> members;

    std::size_t k() const noexcept { return members.size(); }

    friend bool operator==(const ClusterIndex&, const ClusterIndex&) = default;
};

}  // namespace msdrec
