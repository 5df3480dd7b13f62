#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "msdrec/types.hpp"

namespace msdrec {

struct GenConfig {
    std::size_t n_tracks = 1000;
    std::size_t n_artists = 100;
    std::size_t n_clusters_true = 3;
    std::size_t n_features = 54;
    /// Pairwise distance between planted centers, in units of cluster_std.
    double separation = 8.0;
    /// Trailing features that carry no cluster signal.
    std::size_t noise_features = 0;
    std::size_t genre_vocab_per_cluster = 8;
    /// Probability that any single scalar feature value is absent.
    double missing_rate = 0.0;
    std::uint64_t seed = 0;

    /// Within-cluster standard deviation of every informative feature.
    double cluster_std = 1.0;
    std::size_t terms_per_artist = 4;
    std::size_t similar_per_artist = 10;
    /// Extra constant-valued decoy features (`decoy_constant_<i>`).
    std::size_t zero_variance_features = 0;
    /// Extra decoy features (`decoy_sparse_<i>`) missing from exactly
    /// round(sparse_missing_fraction · n_tracks) records.
    std::size_t sparse_features = 0;
    double sparse_missing_fraction = 0.6;
    /// Emit the first min(12, informative) features as 8-step timbre sequences
    /// whose component means equal the drawn values.
    bool with_segments = false;
};

void validate_gen_config(const GenConfig& config);

struct GroundTruth {
    /// (track_id, planted label) in dataset order.
    std::vector<std::pair<std::string, std::size_t>> track_labels;
    std::map<std::string, std::size_t> artist_labels;
};

struct GeneratedDataset {
    std::vector<TrackRecord> tracks;
    GroundTruth truth;
};

/// Fully determined by the config (including its seed).
GeneratedDataset generate(const GenConfig& config);

/// One `{"planted_label":…,"track_id":…}` object per line.
void write_truth_jsonl(std::ostream& out, const GroundTruth& truth);
GroundTruth load_truth_jsonl(const std::filesystem::path& path);

/// `data.jsonl` → `data.truth.jsonl`.
std::filesystem::path truth_path_for(const std::filesystem::path& dataset_path);

}  // namespace msdrec
