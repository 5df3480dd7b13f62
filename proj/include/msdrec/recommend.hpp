#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "msdrec/types.hpp"

namespace msdrec {

/// Read-only lookup from track_id to record. Does not own the records.
class TrackStore {
public:
    explicit TrackStore(std::span<const TrackRecord> records);

    const TrackRecord* find(const std::string& track_id) const noexcept;
    /// Throws Error(UnknownTrack).
    const TrackRecord& at(const std::string& track_id) const;
    std::size_t size() const noexcept { return by_id_.size(); }

private:
    std::unordered_map<std::string, const TrackRecord*> by_id_;
};

struct RecommendConfig {
    std::size_t top_n_artists = 5;
    std::size_t max_songs = 10;
    bool exclude_input_artists = false;
};

struct Recommendation {
    std::string track_id;
    std::string artist_id;
    std::string title;
    std::string artist_name;
    std::size_t source_cluster = 0;
    std::size_t artist_support = 0;
    double genre_overlap = 0.0;

    friend bool operator==(const Recommendation&, const Recommendation&) = default;
};

/// Each similar_artists entry of every member track of `clusters` adds one
/// to that artist's count.
std::map<std::string, std::size_t> count_similar_artists(const ClusterIndex& index, const TrackStore& store,
                                                         const std::set<std::size_t>& clusters);

/// Sorted by count descending then artist_id ascending, truncated to n.
std::vector<std::string> top_n_artists(const std::map<std::string, std::size_t>& counts, std::size_t n);

/// Jaccard similarity; 0 when both sets are empty.
double genre_overlap(const std::set<std::string>& a, const std::set<std::string>& b);

/// Songs from the input tracks' clusters by the n most frequent similar
/// artists of those clusters, excluding the inputs themselves. Ordered by
/// artist rank then track_id.
std::vector<Recommendation> recommend(const KMeansModel& model, const ClusterIndex& index, const TrackStore& store,
                                      std::span<const std::string> input_track_ids, const RecommendConfig& config);

}  // namespace msdrec
