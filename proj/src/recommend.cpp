#include "msdrec/recommend.hpp"

#include <algorithm>

#include "msdrec/error.hpp"
#include "msdrec/serialize.hpp"

namespace msdrec {

TrackStore::TrackStore(std::span<const TrackRecord> records) {
    by_id_.reserve(records.size());
    for (const auto& r : records) {
        if (!by_id_.emplace(r.track_id, &r).second) throw Error(ErrorKind::DuplicateTrackId, r.track_id);
    }
}

const TrackRecord* TrackStore::find(const std::string& track_id) const noexcept {
    auto it = by_id_.find(track_id);
    return it == by_id_.end() ? nullptr : it->second;
}

const TrackRecord& TrackStore::at(const std::string& track_id) const {
    if (const auto* r = find(track_id)) return *r;
    throw Error(ErrorKind::UnknownTrack, track_id);
}

std::map<std::string, std::size_t> count_similar_artists(const ClusterIndex& index, const TrackStore& store,
                                                         const std::set<std::size_t>& clusters) {
    if (clusters.empty()) throw Error(ErrorKind::InvalidArgument, "no clusters to count over");
    std::map<std::string, std::size_t> counts;
    for (auto c : clusters) {
        if (c >= index.k()) {
            throw Error(ErrorKind::UnknownCluster, "cluster " + std::to_string(c) + " is not in [0, " +
                                                       std::to_string(index.k()) + ")");
        }
        for (const auto& id : index.members[c]) {
            for (const auto& artist : store.at(id).similar_artists) ++counts[artist];
        }
    }
    return counts;
}

std::vector<std::string> top_n_artists(const std::map<std::string, std::size_t>& counts, std::size_t n) {
    std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
    // counts is already ordered by artist_id, so a stable sort on count keeps the tie-break.
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    std::vector<std::string> out;
    for (std::size_t i = 0; i < ranked.size() && i < n; ++i) out.push_back(ranked[i].first);
    return out;
}

double genre_overlap(const std::set<std::string>& a, const std::set<std::string>& b) {
    if (a.empty() && b.empty()) return 0.0;
    std::size_t shared = 0;
    for (const auto& term : a) shared += b.contains(term) ? 1 : 0;
    const std::size_t united = a.size() + b.size() - shared;
    return static_cast<double>(shared) / static_cast<double>(united);
}

std::vector<Recommendation> recommend(const KMeansModel& model, const ClusterIndex& index, const TrackStore& store,
                                      std::span<const std::string> input_track_ids, const RecommendConfig& config) {
    if (config.top_n_artists < 1 || config.max_songs < 1) {
        throw Error(ErrorKind::InvalidConfig, "top_n_artists and max_songs must be >= 1");
    }
    if (input_track_ids.empty()) throw Error(ErrorKind::InvalidArgument, "no input tracks given");
    if (index.model_id != model_id(model) || index.k() != model.k) {
        throw Error(ErrorKind::SchemaMismatch, "cluster index was not built from this model");
    }

    std::set<std::size_t> clusters;
    std::set<std::string> inputs;
    std::set<std::string> input_artists;
    std::set<std::string> input_terms;
    for (const auto& id : input_track_ids) {
        auto it = index.assignments.find(id);
        if (it == index.assignments.end()) throw Error(ErrorKind::UnknownTrack, id);
        const auto& track = store.at(id);
        clusters.insert(it->second);
        inputs.insert(id);
        input_artists.insert(track.artist_id);
        input_terms.insert(track.artist_terms.begin(), track.artist_terms.end());
    }

    const auto counts = count_similar_artists(index, store, clusters);
    const auto chosen = top_n_artists(counts, config.top_n_artists);
    std::map<std::string, std::size_t> rank;
    for (std::size_t r = 0; r < chosen.size(); ++r) rank.emplace(chosen[r], r);

    std::vector<std::pair<std::size_t, Recommendation>> pool;
    for (auto c : clusters) {
        for (const auto& id : index.members[c]) {
            if (inputs.contains(id)) continue;
            const auto& track = store.at(id);
            if (config.exclude_input_artists && input_artists.contains(track.artist_id)) continue;
            auto r = rank.find(track.artist_id);
            if (r == rank.end()) continue;
            Recommendation rec;
            rec.track_id = track.track_id;
            rec.artist_id = track.artist_id;
            rec.title = track.title;
            rec.artist_name = track.artist_name;
            rec.source_cluster = c;
            rec.artist_support = counts.at(track.artist_id);
            rec.genre_overlap =
                genre_overlap(std::set<std::string>(track.artist_terms.begin(), track.artist_terms.end()), input_terms);
            pool.emplace_back(r->second, std::move(rec));
        }
    }
    std::sort(pool.begin(), pool.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first < b.first;
        return a.second.track_id < b.second.track_id;
    });

    std::vector<Recommendation> out;
    for (std::size_t i = 0; i < pool.size() && i < config.max_songs; ++i) out.push_back(std::move(pool[i].second));
    return out;
}

}  // namespace msdrec
