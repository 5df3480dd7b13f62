#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "msdrec/clustering.hpp"
#include "msdrec/datagen.hpp"
#include "msdrec/features.hpp"
#include "msdrec/ingest.hpp"
#include "oracles.hpp"

using namespace msdrec;

namespace {

std::string dump(const GeneratedDataset& d) {
    std::ostringstream out;
    write_jsonl(out, d.tracks);
    write_truth_jsonl(out, d.truth);
    return out.str();
}

}  // namespace

TEST_CASE("single planted cluster") {
    GenConfig c;
    c.n_tracks = 10;
    c.n_artists = 3;
    c.n_clusters_true = 1;
    const auto d = generate(c);
    REQUIRE(d.tracks.size() == 10);
    for (const auto& [id, label] : d.truth.track_labels) CHECK(label == 0);
}

TEST_CASE("generation is deterministic and seed dependent") {
    GenConfig c;
    c.n_tracks = 300;
    c.n_artists = 30;
    c.seed = 77;
    c.missing_rate = 0.1;
    c.with_segments = true;
    CHECK(dump(generate(c)) == dump(generate(c)));
    auto other = c;
    other.seed = 78;
    CHECK(dump(generate(c)) != dump(generate(other)));
}

TEST_CASE("config validation") {
    GenConfig c;
    c.n_clusters_true = 0;
    CHECK_ERROR(generate(c), ErrorKind::ConfigError);
    c = {};
    c.n_artists = c.n_tracks + 1;
    CHECK_ERROR(generate(c), ErrorKind::ConfigError);
    c = {};
    c.n_clusters_true = c.n_artists + 1;
    CHECK_ERROR(generate(c), ErrorKind::ConfigError);
    c = {};
    c.noise_features = c.n_features + 1;
    CHECK_ERROR(generate(c), ErrorKind::ConfigError);
    c = {};
    c.missing_rate = 1.0;
    CHECK_ERROR(generate(c), ErrorKind::ConfigError);
    c = {};
    c.separation = 0;
    CHECK_ERROR(generate(c), ErrorKind::ConfigError);
}

TEST_CASE("structural guarantees") {
    GenConfig c;
    c.n_tracks = 2000;
    c.n_artists = 120;
    c.n_clusters_true = 4;
    c.seed = 3;
    const auto d = generate(c);
    std::set<std::string> ids, artists;
    std::map<std::string, std::set<std::size_t>> term_clusters;
    std::size_t intra = 0, total = 0;
    for (std::size_t i = 0; i < d.tracks.size(); ++i) {
        const auto& t = d.tracks[i];
        CHECK_NOTHROW(validate_track(t));
        CHECK(ids.insert(t.track_id).second);
        CHECK(d.truth.track_labels[i].first == t.track_id);
        const auto label = d.truth.artist_labels.at(t.artist_id);
        CHECK(d.truth.track_labels[i].second == label);
        artists.insert(t.artist_id);
        for (const auto& term : t.artist_terms) term_clusters[term].insert(label);
        for (const auto& s : t.similar_artists) {
            ++total;
            if (d.truth.artist_labels.at(s) == label) ++intra;
        }
        CHECK(t.features.size() == 54);
    }
    CHECK(artists.size() == 120);
    for (const auto& [term, clusters] : term_clusters) CHECK(clusters.size() == 1);
    REQUIRE(total > 0);
    CHECK(static_cast<double>(intra) / total >= 0.9);
}

TEST_CASE("within-cluster spread matches the configured std") {
    GenConfig c;
    c.n_tracks = 3000;
    c.n_artists = 100;
    c.n_clusters_true = 3;
    c.n_features = 10;
    c.cluster_std = 2.5;
    c.seed = 12;
    const auto d = generate(c);
    const auto& names = d.tracks[0].features;
    for (const auto& [name, unused] : names) {
        for (std::size_t g = 0; g < 3; ++g) {
            double sum = 0, sq = 0;
            std::size_t n = 0;
            for (std::size_t i = 0; i < d.tracks.size(); ++i) {
                if (d.truth.track_labels[i].second != g) continue;
                const double v = *d.tracks[i].feature(name);
                sum += v;
                sq += v * v;
                ++n;
            }
            const double mean = sum / n;
            const double sd = std::sqrt(sq / n - mean * mean);
            CHECK(std::abs(sd - 2.5) / 2.5 < 0.15);
        }
    }
}

TEST_CASE("pipeline recovers planted labels") {
    GenConfig c;
    c.n_tracks = 300;
    c.n_artists = 30;
    c.n_clusters_true = 3;
    c.separation = 8;
    c.seed = 1;
    const auto d = generate(c);
    const auto prepared = prepare_features(d.tracks, {});
    FitConfig f;
    f.k = 3;
    const auto model = kmeans_fit(prepared.matrix, f);
    const auto predicted = kmeans_predict(model, prepared.matrix);
    std::vector<std::size_t> truth;
    for (const auto& [id, label] : d.truth.track_labels) truth.push_back(label);
    CHECK(oracle::aligned_accuracy(truth, predicted, 3) >= 0.99);
}

TEST_CASE("segments, noise and missing values") {
    GenConfig c;
    c.n_tracks = 400;
    c.n_artists = 40;
    c.n_features = 20;
    c.noise_features = 5;
    c.missing_rate = 0.25;
    c.with_segments = true;
    const auto d = generate(c);
    std::size_t missing = 0, cells = 0;
    for (const auto& t : d.tracks) {
        REQUIRE(t.segments);
        CHECK(t.segments->width() == 12);
        // 12 features live in the segments; the other 8 are scalar and absent when missing
        cells += 8;
        missing += 8 - t.features.size();
    }
    CHECK(static_cast<double>(missing) / cells == doctest::Approx(0.25).epsilon(0.2));

    auto summarized = d.tracks;
    summarize_records(summarized);
    for (const auto& t : summarized) CHECK(t.features.contains("timbre_mean_0"));
}

TEST_CASE("truth sidecar round-trips") {
    GenConfig c;
    c.n_tracks = 50;
    c.n_artists = 10;
    const auto d = generate(c);
    const auto dir = oracle::scratch_dir("truth");
    const auto path = truth_path_for(dir / "data.jsonl");
    CHECK(path.filename() == "data.truth.jsonl");
    {
        std::ofstream out(path);
        write_truth_jsonl(out, d.truth);
    }
    const auto back = load_truth_jsonl(path);
    CHECK(back.track_labels == d.truth.track_labels);
}
