#include <algorithm>
#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "msdrec/clustering.hpp"
#include "msdrec/datagen.hpp"
#include "msdrec/features.hpp"
#include "msdrec/random.hpp"
#include "msdrec/recommend.hpp"
#include "msdrec/serialize.hpp"

using namespace msdrec;

namespace {

struct World {
    std::vector<TrackRecord> tracks;
    KMeansModel model;
    ClusterIndex index;
};

TrackRecord at(double f, std::string id, std::string artist, std::vector<std::string> similar,
               std::vector<std::string> terms = {}) {
    auto t = fixture::track(std::move(id), std::move(artist), std::move(similar), std::move(terms));
    t.features["f"] = f;
    return t;
}

/// Two clusters on a line: feature f near 0 is cluster 0, near 100 cluster 1.
World hand_world() {
    World w;
    w.tracks = {at(0, "T1", "A", {"X", "Y"}, {"rock", "indie"}), at(1, "T2", "X", {"Y"}, {"rock"}),
                at(2, "T3", "Y", {"X"}, {"indie", "pop"}), at(3, "T4", "Z", {"W"}, {"jazz"}),
                at(100, "T5", "X", {"Z"}), at(101, "T6", "W", {"Z", "X"})};
    w.model.k = 2;
    w.model.schema = std::make_shared<const FeatureSchema>(make_schema({{"f", 0.0, 1.0}}));
    w.model.centroids = Matrix(2, 1, std::vector<double>{1.5, 100.5});
    w.model.converged = true;
    w.index = build_index(w.model, build_matrix(w.tracks, w.model.schema));
    return w;
}

std::vector<std::string> ids(const std::vector<Recommendation>& recs) {
    std::vector<std::string> out;
    for (const auto& r : recs) out.push_back(r.track_id);
    return out;
}

}  // namespace

TEST_CASE("hand-enumerated recommendation") {
    const auto w = hand_world();
    const TrackStore store(w.tracks);
    RecommendConfig c;
    c.top_n_artists = 2;
    const std::vector<std::string> input{"T1"};
    const auto recs = recommend(w.model, w.index, store, input, c);
    CHECK(ids(recs) == std::vector<std::string>{"T2", "T3"});
    CHECK(recs[0].artist_id == "X");
    CHECK(recs[0].artist_support == 2);
    CHECK(recs[0].source_cluster == 0);
    CHECK(recs[0].genre_overlap == doctest::Approx(0.5));
    CHECK(recs[1].genre_overlap == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("similar artist counts") {
    std::vector<TrackRecord> t{at(0, "S1", "P", {"X", "Y"}), at(0, "S2", "Q", {"Y"}), at(0, "S3", "R", {"X"}),
                               at(0, "S4", "S", {"W"})};
    KMeansModel m;
    m.k = 2;
    m.schema = std::make_shared<const FeatureSchema>(make_schema({{"f", 0.0, 1.0}}));
    m.centroids = Matrix(2, 1, std::vector<double>{0, 50});
    const auto idx = build_index(m, build_matrix(t, m.schema));
    const TrackStore store(t);
    const auto counts = count_similar_artists(idx, store, {0});
    CHECK(counts == std::map<std::string, std::size_t>{{"X", 2}, {"Y", 2}, {"W", 1}});
    CHECK(count_similar_artists(idx, store, {1}).empty());
    CHECK_ERROR(count_similar_artists(idx, store, {2}), ErrorKind::UnknownCluster);
    CHECK_ERROR(count_similar_artists(idx, store, {}), ErrorKind::InvalidArgument);
}

TEST_CASE("count additivity across clusters") {
    const auto w = hand_world();
    const TrackStore store(w.tracks);
    auto both = count_similar_artists(w.index, store, {0, 1});
    auto a = count_similar_artists(w.index, store, {0});
    for (const auto& [artist, n] : count_similar_artists(w.index, store, {1})) a[artist] += n;
    CHECK(both == a);
}

TEST_CASE("top-n ordering") {
    const std::map<std::string, std::size_t> counts{{"X", 2}, {"Y", 2}, {"W", 1}};
    CHECK(top_n_artists(counts, 2) == std::vector<std::string>{"X", "Y"});
    CHECK(top_n_artists(counts, 10) == std::vector<std::string>{"X", "Y", "W"});
    CHECK(top_n_artists({}, 3).empty());
    const std::map<std::string, std::size_t> mixed{{"B", 1}, {"A", 1}, {"C", 3}};
    CHECK(top_n_artists(mixed, 3) == std::vector<std::string>{"C", "A", "B"});
}

TEST_CASE("genre overlap") {
    CHECK(genre_overlap({"rock", "pop"}, {"rock"}) == 0.5);
    CHECK(genre_overlap({"rock", "pop"}, {"pop", "rock"}) == 1.0);
    CHECK(genre_overlap({"rock"}, {"jazz"}) == 0.0);
    CHECK(genre_overlap({}, {}) == 0.0);
}

TEST_CASE("input alone in its cluster yields nothing") {
    auto w = hand_world();
    w.tracks.push_back(at(500, "T7", "Q", {"X"}));
    w.model.k = 3;
    w.model.centroids = Matrix(3, 1, std::vector<double>{1.5, 100.5, 500});
    w.index = build_index(w.model, build_matrix(w.tracks, w.model.schema));
    const TrackStore store(w.tracks);
    const std::vector<std::string> input{"T7"};
    CHECK(recommend(w.model, w.index, store, input, {}).empty());
}

TEST_CASE("multiple inputs use the union of their clusters") {
    const auto w = hand_world();
    const TrackStore store(w.tracks);
    RecommendConfig c;
    c.top_n_artists = 10;
    c.max_songs = 100;
    const std::vector<std::string> input{"T1", "T6"};
    const auto recs = recommend(w.model, w.index, store, input, c);
    const auto rec_ids = ids(recs);
    std::set<std::string> got(rec_ids.begin(), rec_ids.end());
    // W has support but its only track T6 is an input; Z -> T4, X -> T2/T5, Y -> T3
    CHECK(got == std::set<std::string>{"T2", "T3", "T4", "T5"});
}

TEST_CASE("exclude input artists and truncation") {
    auto w = hand_world();
    w.tracks.push_back(at(2, "T0", "A", {}));
    w.index = build_index(w.model, build_matrix(w.tracks, w.model.schema));
    const TrackStore store(w.tracks);
    RecommendConfig c;
    c.top_n_artists = 10;
    const std::vector<std::string> input{"T3"};
    auto recs = recommend(w.model, w.index, store, input, c);
    // Y's own similar list counts too; A gets support from nobody, so only chosen artists appear
    for (const auto& r : recs) CHECK(r.track_id != "T3");
    c.max_songs = 1;
    CHECK(recommend(w.model, w.index, store, input, c).size() == 1);

    w.tracks.push_back(at(1, "T8", "Y", {"X"}));
    w.index = build_index(w.model, build_matrix(w.tracks, w.model.schema));
    const TrackStore store2(w.tracks);
    c.max_songs = 10;
    auto with_self = recommend(w.model, w.index, store2, input, c);
    const auto with_ids = ids(with_self);
    CHECK(std::count(with_ids.begin(), with_ids.end(), "T8") == 1);
    c.exclude_input_artists = true;
    auto without = recommend(w.model, w.index, store2, input, c);
    const auto without_ids = ids(without);
    CHECK(std::count(without_ids.begin(), without_ids.end(), "T8") == 0);
}

TEST_CASE("recommend errors") {
    const auto w = hand_world();
    const TrackStore store(w.tracks);
    const std::vector<std::string> unknown{"NOPE"}, none{}, ok{"T1"};
    CHECK_ERROR(recommend(w.model, w.index, store, unknown, {}), ErrorKind::UnknownTrack);
    CHECK_ERROR(recommend(w.model, w.index, store, none, {}), ErrorKind::InvalidArgument);
    RecommendConfig bad;
    bad.top_n_artists = 0;
    CHECK_ERROR(recommend(w.model, w.index, store, ok, bad), ErrorKind::InvalidConfig);
    auto other = w.model;
    other.inertia = 5;
    CHECK_ERROR(recommend(other, w.index, store, ok, {}), ErrorKind::SchemaMismatch);
    CHECK_ERROR(store.at("NOPE"), ErrorKind::UnknownTrack);
}

TEST_CASE("fuzzed queries keep disjointness, containment and determinism") {
    GenConfig g;
    g.n_tracks = 1500;
    g.n_artists = 80;
    g.n_clusters_true = 4;
    g.n_features = 10;
    g.seed = 17;
    const auto data = generate(g);
    const auto prep = prepare_features(data.tracks, {});
    FitConfig f;
    f.k = 6;
    const auto model = kmeans_fit(prep.matrix, f);
    const auto index = build_index(model, prep.matrix);
    const TrackStore store(data.tracks);
    Rng rng(99);
    for (int q = 0; q < 300; ++q) {
        std::vector<std::string> input;
        for (std::size_t i = 1 + rng.uniform_index(3); i > 0; --i) {
            input.push_back(data.tracks[rng.uniform_index(data.tracks.size())].track_id);
        }
        RecommendConfig c;
        c.top_n_artists = 1 + rng.uniform_index(8);
        c.max_songs = 1 + rng.uniform_index(20);
        c.exclude_input_artists = rng.uniform_index(2) == 1;
        const auto recs = recommend(model, index, store, input, c);
        CHECK(recs.size() <= c.max_songs);
        std::set<std::size_t> clusters;
        for (const auto& id : input) clusters.insert(index.assignments.at(id));
        const auto chosen = top_n_artists(count_similar_artists(index, store, clusters), c.top_n_artists);
        for (const auto& r : recs) {
            CHECK(std::find(input.begin(), input.end(), r.track_id) == input.end());
            CHECK(std::find(chosen.begin(), chosen.end(), r.artist_id) != chosen.end());
            CHECK(clusters.contains(index.assignments.at(r.track_id)));
            CHECK(r.source_cluster == index.assignments.at(r.track_id));
            CHECK(r.genre_overlap >= 0.0);
            CHECK(r.genre_overlap <= 1.0);
        }
        const auto again = recommend(model, index, store, input, c);
        CHECK(ids(again) == ids(recs));
    }
}
