#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "msdrec/types.hpp"

namespace msdrec {

enum class DataFormat { Jsonl, Csv };

/// `.csv` selects CSV; anything else is read as JSONL.
DataFormat format_from_path(const std::filesystem::path& path) noexcept;

/// Streams records one at a time in file order. Records are normalized and
/// validated; duplicate ids are not checked here.
void for_each_record(const std::filesystem::path& path, DataFormat format,
                     const std::function<void(TrackRecord&&)>& sink);

std::vector<TrackRecord> load_dataset(const std::filesystem::path& path, DataFormat format);
std::vector<TrackRecord> load_dataset(const std::filesystem::path& path);

/// Parses several files (in parallel when workers > 1) and concatenates them
/// in path-sorted order. Track ids must be unique across all files.
std::vector<TrackRecord> load_datasets(std::vector<std::filesystem::path> paths, unsigned workers = 0);

void write_jsonl(std::ostream& out, std::span<const TrackRecord> records);
/// Lists are pipe-joined. Records carrying segments must be summarized first.
void write_csv(std::ostream& out, std::span<const TrackRecord> records);
void save_dataset(const std::filesystem::path& path, std::span<const TrackRecord> records, DataFormat format);

/// `timbre_mean_<j>` per timbre component plus `segments_count`; also
/// `segments_confidence_mean` when confidences are present. An empty sequence
/// yields only `segments_count = 0`.
std::map<std::string, double> summarize_segments(const SegmentSequence& seq);

/// Folds segment summaries into each record's features and drops the raw
/// sequences.
void summarize_records(std::vector<TrackRecord>& records);

struct FeatureStats {
    std::string feature_name;
    std::size_t count_present = 0;
    std::size_t count_missing = 0;
    double mean = 0.0;
    double variance = 0.0;
    double min = 0.0;
    double max = 0.0;
    /// False when any record carries a string value under this name.
    bool numeric = true;

    friend bool operator==(const FeatureStats&, const FeatureStats&) = default;
};

/// Streaming mean/variance accumulator (Welford) with a pairwise merge.
struct RunningStats {
    std::size_t count = 0;
    double mean = 0.0;
    double m2 = 0.0;
    double min = 0.0;
    double max = 0.0;

    void add(double x) noexcept;
    static RunningStats merge(const RunningStats& a, const RunningStats& b) noexcept;
    double population_variance() const noexcept { return count > 1 ? m2 / static_cast<double>(count) : 0.0; }
};

/// One entry per feature name seen in any record, sorted by name. Rows are
/// accumulated per fixed-size chunk and merged through a fixed binary tree,
/// so the worker count never changes the result.
std::vector<FeatureStats> compute_stats(std::span<const TrackRecord> records, unsigned workers = 0);

}  // namespace msdrec
