#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "msdrec/datagen.hpp"
#include "msdrec/features.hpp"
#include "msdrec/ingest.hpp"
#include "msdrec/random.hpp"

using namespace msdrec;

namespace {

FeatureStats numeric(std::string name, std::size_t present, std::size_t missing, double variance) {
    FeatureStats s;
    s.feature_name = std::move(name);
    s.count_present = present;
    s.count_missing = missing;
    s.variance = variance;
    return s;
}

std::optional<DropReason> reason_of(const SelectionReport& r, const std::string& name) {
    for (const auto& d : r.dropped) {
        if (d.feature_name == name) return d.reason;
    }
    return std::nullopt;
}

TrackRecord valued(std::string id, std::map<std::string, std::optional<double>> f) {
    auto t = fixture::track(std::move(id), "A");
    t.features = std::move(f);
    return t;
}

}  // namespace

TEST_CASE("rule examples: zero variance and sparse") {
    std::vector<FeatureStats> stats{numeric("constant", 100, 0, 0.0), numeric("patchy", 40, 60, 1.0),
                                    numeric("good", 100, 0, 2.0)};
    const auto r = select_features(stats, {});
    CHECK(r.kept == std::vector<std::string>{"good"});
    CHECK(reason_of(r, "constant") == DropReason::ZeroVariance);
    CHECK(reason_of(r, "patchy") == DropReason::Sparse);
    CHECK(r.summary() == SelectionSummary{1, 1, 0, 0});
}

TEST_CASE("manual drop list") {
    const std::vector<std::string> pruned{"song_length", "bars_confidence_mean", "sections_confidence_mean",
                                          "segments_confidence_mean", "loudness_confidence_mean"};
    std::vector<FeatureStats> stats;
    for (const auto& n : pruned) stats.push_back(numeric(n, 10, 0, 1.0));
    stats.push_back(numeric("tempo", 10, 0, 1.0));
    SelectionConfig c;
    c.manual_drop = pruned;
    const auto r = select_features(stats, c);
    CHECK(r.kept == std::vector<std::string>{"tempo"});
    CHECK(r.dropped.size() == pruned.size());
    for (const auto& n : pruned) CHECK(reason_of(r, n) == DropReason::Manual);
}

TEST_CASE("manual keep overrides automatic rules") {
    std::vector<FeatureStats> stats{numeric("patchy", 40, 60, 1.0), numeric("good", 100, 0, 2.0)};
    SelectionConfig c;
    c.manual_keep = {"patchy"};
    CHECK(select_features(stats, c).kept == std::vector<std::string>{"good", "patchy"});
}

TEST_CASE("string features are never kept") {
    auto s = numeric("mood", 10, 0, 0.0);
    s.numeric = false;
    const auto r = select_features(std::vector{s, numeric("tempo", 10, 0, 1)}, {});
    CHECK(reason_of(r, "mood") == DropReason::NonNumeric);
}

TEST_CASE("selection errors and config validation") {
    CHECK_ERROR(select_features(std::vector{numeric("c", 10, 0, 0.0)}, {}), ErrorKind::AllFeaturesDropped);
    SelectionConfig overlap;
    overlap.manual_drop = {"a"};
    overlap.manual_keep = {"a"};
    CHECK_ERROR(validate_selection_config(overlap), ErrorKind::ConfigError);
    SelectionConfig neg;
    neg.variance_epsilon = -1;
    CHECK_ERROR(validate_selection_config(neg), ErrorKind::ConfigError);
    SelectionConfig frac;
    frac.max_missing_fraction = 1.5;
    CHECK_ERROR(validate_selection_config(frac), ErrorKind::ConfigError);
}

TEST_CASE("selection properties: partition, idempotence, monotonicity") {
    Rng rng(31);
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<FeatureStats> stats;
        const std::size_t n = 100;
        const std::size_t m = 1 + rng.uniform_index(12);
        for (std::size_t j = 0; j < m; ++j) {
            const std::size_t present = rng.uniform_index(n + 1);
            // avoid exact boundary ties
            const double variance = rng.uniform_index(4) == 0 ? 0.0 : 0.5 + rng.uniform();
            auto s = numeric("f" + std::to_string(j), present, n - present, present > 1 ? variance : 0.0);
            s.numeric = rng.uniform_index(10) != 0;
            stats.push_back(s);
        }
        SelectionConfig c;
        c.max_missing_fraction = 0.05 + 0.9 * rng.uniform();
        SelectionReport r;
        try {
            r = select_features(stats, c);
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::AllFeaturesDropped);
            continue;
        }
        std::set<std::string> all, seen;
        for (const auto& s : stats) all.insert(s.feature_name);
        for (const auto& k : r.kept) CHECK(seen.insert(k).second);
        for (const auto& d : r.dropped) CHECK(seen.insert(d.feature_name).second);
        CHECK(seen == all);
        CHECK(std::is_sorted(r.kept.begin(), r.kept.end()));

        std::vector<FeatureStats> restricted;
        for (const auto& s : stats) {
            if (std::find(r.kept.begin(), r.kept.end(), s.feature_name) != r.kept.end()) restricted.push_back(s);
        }
        const auto again = select_features(restricted, c);
        CHECK(again.kept == r.kept);
        CHECK(again.dropped.empty());

        SelectionConfig tighter = c;
        tighter.max_missing_fraction = c.max_missing_fraction * rng.uniform();
        std::vector<std::string> tight_kept;
        try {
            tight_kept = select_features(stats, tighter).kept;
        } catch (const Error&) {
        }
        for (const auto& k : tight_kept) CHECK(std::find(r.kept.begin(), r.kept.end(), k) != r.kept.end());
    }
}

TEST_CASE("fit_scaler examples") {
    std::vector<TrackRecord> r{valued("T1", {{"x", 1.0}, {"c", 5.0}}), valued("T2", {{"x", 3.0}, {"c", 5.0}})};
    const std::vector<std::string> kept{"x"};
    const auto s = fit_scaler(r, kept);
    CHECK(s.scaler_mean == std::vector<double>{2.0});
    CHECK(s.scaler_std == std::vector<double>{1.0});
    const std::vector<std::string> constant{"c"};
    CHECK_ERROR(fit_scaler(r, constant), ErrorKind::DegenerateFeature);
    const std::vector<std::string> absent{"nowhere"};
    CHECK_ERROR(fit_scaler(r, absent), ErrorKind::DegenerateFeature);

    std::vector<TrackRecord> two{valued("T1", {{"b", 1.0}, {"a", 0.0}}), valued("T2", {{"b", 2.0}, {"a", 4.0}})};
    const std::vector<std::string> ba{"b", "a"}, ab{"a", "b"};
    CHECK(fit_scaler(two, ba) == fit_scaler(two, ab));
    CHECK(fit_scaler(two, ba).feature_names == std::vector<std::string>{"a", "b"});
}

TEST_CASE("build_matrix examples") {
    auto schema = std::make_shared<const FeatureSchema>(make_schema({{"x", 10.0, 2.0}, {"y", -1.0, 0.5}}));
    std::vector<TrackRecord> r{valued("M", {{"x", 10.0}, {"y", -1.0}}), valued("E", {}),
                               valued("P", {{"x", 14.0}, {"y", std::nullopt}})};
    const auto m = build_matrix(r, schema);
    CHECK(m.row_ids == std::vector<std::string>{"M", "E", "P"});
    CHECK(m.rows(0, 0) == 0.0);
    CHECK(m.rows(0, 1) == 0.0);
    CHECK(m.rows(1, 0) == 0.0);
    CHECK(m.rows(1, 1) == 0.0);
    CHECK(m.rows(2, 0) == 2.0);
    CHECK(m.rows(2, 1) == 0.0);
}

TEST_CASE("training columns come out standardized") {
    GenConfig g;
    g.n_tracks = 1500;
    g.n_artists = 60;
    g.n_features = 20;
    g.seed = 5;
    const auto data = generate(g);
    const auto prepared = prepare_features(data.tracks, {});
    const auto& m = prepared.matrix.rows;
    REQUIRE(m.cols() == 20);
    for (std::size_t j = 0; j < m.cols(); ++j) {
        double mean = 0, sq = 0;
        for (std::size_t i = 0; i < m.rows(); ++i) mean += m(i, j);
        mean /= m.rows();
        for (std::size_t i = 0; i < m.rows(); ++i) sq += (m(i, j) - mean) * (m(i, j) - mean);
        CHECK(std::abs(mean) <= 1e-9);
        CHECK(std::abs(std::sqrt(sq / m.rows()) - 1.0) <= 1e-9);
    }
}

TEST_CASE("matrix construction is worker invariant") {
    GenConfig g;
    g.n_tracks = 5000;
    g.n_artists = 100;
    g.n_features = 10;
    g.missing_rate = 0.2;
    g.seed = 6;
    const auto data = generate(g);
    const auto a = prepare_features(data.tracks, {}, 1);
    const auto b = prepare_features(data.tracks, {}, 3);
    CHECK(a.matrix.rows == b.matrix.rows);
    CHECK(*a.matrix.schema == *b.matrix.schema);
}

TEST_CASE("decoy features are pruned with the right reasons") {
    GenConfig g;
    g.n_tracks = 500;
    g.n_artists = 50;
    g.n_features = 8;
    g.zero_variance_features = 1;
    g.sparse_features = 1;
    g.sparse_missing_fraction = 0.6;
    const auto data = generate(g);
    const auto prepared = prepare_features(data.tracks, {});
    CHECK(prepared.report.dropped.size() == 2);
    CHECK(reason_of(prepared.report, "decoy_constant_0") == DropReason::ZeroVariance);
    CHECK(reason_of(prepared.report, "decoy_sparse_0") == DropReason::Sparse);
    CHECK(prepared.matrix.schema->provenance == SelectionSummary{1, 1, 0, 0});
}
