#include "msdrec/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>
#include <set>

#include "msdrec/error.hpp"
#include "msdrec/random.hpp"
#include "msdrec/serialize.hpp"

namespace msdrec {

namespace {

// MSD-flavoured names for scalar features; generic names fill the remainder.
constexpr const char* kFeatureNames[] = {
    "danceability",          "energy",
    "loudness",              "tempo",
    "key",                   "key_confidence",
    "mode",                  "mode_confidence",
    "time_signature",        "time_signature_confidence",
    "artist_familiarity",    "artist_hotttnesss",
    "song_hotttnesss",       "song_length",
    "end_of_fade_in",        "start_of_fade_out",
    "bars_confidence_mean",  "beats_confidence_mean",
    "sections_confidence_mean", "segments_confidence_mean",
    "tatums_confidence_mean", "loudness_confidence_mean",
    "segments_loudness_max_mean", "segments_loudness_start_mean",
    "segments_loudness_max_time_mean", "artist_latitude",
    "artist_longitude",      "year",
};

constexpr const char* kGenreRoots[] = {"rock",  "pop",    "jazz",    "blues",  "folk",    "metal",  "soul",
                                       "punk",  "house",  "techno",  "ambient", "funk",   "reggae", "country",
                                       "disco", "grunge", "trip hop", "salsa",  "new wave", "swing"};

constexpr std::size_t kTimbreWidth = 12;
constexpr std::size_t kSegmentSteps = 8;

std::string padded(const char* prefix, std::size_t value, int width) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s%0*zu", prefix, width, value);
    return buf;
}

std::vector<std::string> feature_names(const GenConfig& config, std::size_t timbre_width) {
    std::vector<std::string> names;
    names.reserve(config.n_features);
    for (std::size_t j = 0; j < timbre_width; ++j) names.push_back("timbre_mean_" + std::to_string(j));
    std::size_t pool = 0;
    std::size_t generic = 0;
    while (names.size() < config.n_features) {
        if (pool < std::size(kFeatureNames)) {
            names.emplace_back(kFeatureNames[pool++]);
        } else {
            names.push_back(padded("feature_", generic++, 2));
        }
    }
    return names;
}

/// Orthonormal d×d matrix from Gram-Schmidt on Gaussian columns.
Matrix random_rotation(std::size_t d, Rng& rng) {
    Matrix q(d, d);
    for (std::size_t col = 0; col < d; ++col) {
        std::vector<double> v(d);
        double len = 0.0;
        do {
            for (auto& x : v) x = rng.normal();
            for (std::size_t prev = 0; prev < col; ++prev) {
                double dot = 0.0;
                for (std::size_t i = 0; i < d; ++i) dot += v[i] * q(i, prev);
                for (std::size_t i = 0; i < d; ++i) v[i] -= dot * q(i, prev);
            }
            len = 0.0;
            for (double x : v) len += x * x;
            len = std::sqrt(len);
        } while (len < 1e-6);
        for (std::size_t i = 0; i < d; ++i) q(i, col) = v[i] / len;
    }
    return q;
}

/// g centers in `dims` dimensions with minimum pairwise distance `separation`.
/// Exact regular simplex when g <= dims, scaled Gaussian draws otherwise.
Matrix planted_centers(std::size_t g, std::size_t dims, double separation, Rng& rng) {
    Matrix centers(g, dims);
    if (dims == 0 || g == 1) return centers;
    if (g <= dims) {
        Matrix simplex(g, dims);
        const double scale = separation / std::sqrt(2.0);
        for (std::size_t c = 0; c < g; ++c) {
            for (std::size_t j = 0; j < g; ++j) simplex(c, j) = scale * ((c == j ? 1.0 : 0.0) - 1.0 / static_cast<double>(g));
        }
        const Matrix rot = random_rotation(dims, rng);
        for (std::size_t c = 0; c < g; ++c) {
            for (std::size_t i = 0; i < dims; ++i) {
                double v = 0.0;
                for (std::size_t j = 0; j < g; ++j) v += rot(i, j) * simplex(c, j);
                centers(c, i) = v;
            }
        }
        return centers;
    }
    for (std::size_t c = 0; c < g; ++c) {
        for (std::size_t i = 0; i < dims; ++i) centers(c, i) = rng.normal();
    }
    double closest = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < g; ++a) {
        for (std::size_t b = a + 1; b < g; ++b) closest = std::min(closest, std::sqrt(squared_distance(centers.row(a), centers.row(b))));
    }
    const double scale = closest > 0.0 ? separation / closest : 0.0;
    for (std::size_t c = 0; c < g; ++c) {
        for (auto& x : centers.row(c)) x *= scale;
    }
    return centers;
}

template <typename T>
void shuffle(std::vector<T>& items, Rng& rng) {
    for (std::size_t i = items.size(); i > 1; --i) std::swap(items[i - 1], items[rng.uniform_index(i)]);
}

std::vector<std::string> genre_vocabulary(std::size_t cluster, std::size_t size) {
    std::vector<std::string> vocab;
    const std::size_t roots = std::size(kGenreRoots);
    for (std::size_t j = 0; j < size; ++j) {
        std::string term = kGenreRoots[(cluster * size + j) % roots];
        if (j >= roots) term += " " + std::to_string(j / roots);
        term += " " + std::to_string(cluster);
        vocab.push_back(std::move(term));
    }
    return vocab;
}

}  // namespace

void validate_gen_config(const GenConfig& c) {
    auto bad = [](const std::string& what) { throw Error(ErrorKind::ConfigError, what); };
    if (c.n_tracks < 1) bad("n_tracks must be >= 1");
    if (c.n_artists < 1 || c.n_artists > c.n_tracks) bad("n_artists must lie in [1, n_tracks]");
    if (c.n_clusters_true < 1 || c.n_clusters_true > c.n_artists) bad("n_clusters_true must lie in [1, n_artists]");
    if (c.n_features < 1) bad("n_features must be >= 1");
    if (c.noise_features > c.n_features) bad("noise_features must be <= n_features");
    if (!(c.separation > 0.0) || !std::isfinite(c.separation)) bad("separation must be positive");
    if (c.genre_vocab_per_cluster < 1) bad("genre_vocab_per_cluster must be >= 1");
    if (!(c.missing_rate >= 0.0 && c.missing_rate < 1.0)) bad("missing_rate must lie in [0, 1)");
    if (!(c.cluster_std > 0.0) || !std::isfinite(c.cluster_std)) bad("cluster_std must be positive");
    if (!(c.sparse_missing_fraction >= 0.0 && c.sparse_missing_fraction <= 1.0)) {
        bad("sparse_missing_fraction must lie in [0, 1]");
    }
}

GeneratedDataset generate(const GenConfig& config) {
    validate_gen_config(config);
    const std::size_t g = config.n_clusters_true;
    const std::size_t informative = config.n_features - config.noise_features;
    const std::size_t timbre_width = config.with_segments ? std::min(kTimbreWidth, informative) : 0;
    const auto names = feature_names(config, timbre_width);

    Rng center_rng(derive_seed(config.seed, {1}));
    const Matrix centers = planted_centers(g, informative, config.separation * config.cluster_std, center_rng);
    std::vector<double> offsets(config.n_features);
    for (auto& o : offsets) o = std::round(center_rng.uniform() * 200.0 - 100.0);

    // Artists: planted cluster, genre terms, similar-artist edges.
    Rng artist_rng(derive_seed(config.seed, {2}));
    std::vector<std::size_t> artist_label(config.n_artists);
    for (std::size_t a = 0; a < config.n_artists; ++a) artist_label[a] = a % g;
    shuffle(artist_label, artist_rng);
    std::vector<std::string> artist_ids(config.n_artists);
    for (std::size_t a = 0; a < config.n_artists; ++a) artist_ids[a] = padded("AR", a, 6);

    std::vector<std::vector<std::string>> vocab(g);
    for (std::size_t c = 0; c < g; ++c) vocab[c] = genre_vocabulary(c, config.genre_vocab_per_cluster);
    std::vector<std::vector<std::size_t>> cluster_artists(g);
    for (std::size_t a = 0; a < config.n_artists; ++a) cluster_artists[artist_label[a]].push_back(a);

    std::vector<std::vector<std::string>> artist_terms(config.n_artists);
    std::vector<std::vector<std::string>> similar(config.n_artists);
    for (std::size_t a = 0; a < config.n_artists; ++a) {
        const auto& words = vocab[artist_label[a]];
        for (auto idx : artist_rng.sample_without_replacement(words.size(), std::min(config.terms_per_artist, words.size()))) {
            artist_terms[a].push_back(words[idx]);
        }

        const std::size_t edges = std::min(config.similar_per_artist, config.n_artists - 1);
        std::vector<std::size_t> peers;
        for (auto b : cluster_artists[artist_label[a]]) {
            if (b != a) peers.push_back(b);
        }
        const std::size_t intra = std::min(peers.size(), (edges * 9 + 9) / 10);
        std::set<std::size_t> chosen;
        for (auto idx : artist_rng.sample_without_replacement(peers.size(), intra)) chosen.insert(peers[idx]);
        std::vector<std::size_t> ordered;
        for (auto b : chosen) ordered.push_back(b);
        // Remaining edges are uniform over every other artist.
        while (ordered.size() < edges) {
            const std::size_t b = artist_rng.uniform_index(config.n_artists);
            if (b == a || chosen.contains(b)) continue;
            chosen.insert(b);
            ordered.push_back(b);
        }
        for (auto b : ordered) similar[a].push_back(artist_ids[b]);
    }

    // Tracks: every artist gets at least one, the rest are uniform.
    Rng track_rng(derive_seed(config.seed, {3}));
    std::vector<std::size_t> track_artist(config.n_tracks);
    for (std::size_t t = 0; t < config.n_tracks; ++t) {
        track_artist[t] = t < config.n_artists ? t : track_rng.uniform_index(config.n_artists);
    }
    shuffle(track_artist, track_rng);

    std::vector<std::vector<std::size_t>> sparse_missing(config.sparse_features);
    const auto sparse_count = static_cast<std::size_t>(std::llround(config.sparse_missing_fraction * static_cast<double>(config.n_tracks)));
    for (auto& rows : sparse_missing) rows = track_rng.sample_without_replacement(config.n_tracks, sparse_count);

    GeneratedDataset out;
    out.tracks.reserve(config.n_tracks);
    out.truth.track_labels.reserve(config.n_tracks);
    for (std::size_t a = 0; a < config.n_artists; ++a) out.truth.artist_labels.emplace(artist_ids[a], artist_label[a]);

    std::vector<double> values(config.n_features);
    for (std::size_t t = 0; t < config.n_tracks; ++t) {
        const std::size_t a = track_artist[t];
        const std::size_t label = artist_label[a];
        TrackRecord track;
        track.track_id = padded("TR", t, 8);
        track.artist_id = artist_ids[a];
        track.artist_name = "Artist " + std::to_string(a);
        track.title = "Song " + std::to_string(t);
        track.artist_terms = artist_terms[a];
        track.similar_artists = similar[a];

        for (std::size_t j = 0; j < config.n_features; ++j) {
            const double center = j < informative ? centers(label, j) : 0.0;
            values[j] = offsets[j] + center + config.cluster_std * track_rng.normal();
        }
        for (std::size_t j = timbre_width; j < config.n_features; ++j) {
            if (config.missing_rate > 0.0 && track_rng.uniform() < config.missing_rate) continue;
            track.features[names[j]] = values[j];
        }
        if (timbre_width > 0) {
            SegmentSequence seq;
            seq.timbre.assign(kSegmentSteps, std::vector<double>(timbre_width));
            for (std::size_t j = 0; j < timbre_width; ++j) {
                double mean = 0.0;
                for (auto& step : seq.timbre) {
                    step[j] = track_rng.normal();
                    mean += step[j];
                }
                mean /= static_cast<double>(kSegmentSteps);
                for (auto& step : seq.timbre) step[j] += values[j] - mean;
            }
            track.segments = std::move(seq);
        }
        for (std::size_t i = 0; i < config.zero_variance_features; ++i) {
            track.features[padded("decoy_constant_", i, 1)] = 1.0;
        }
        for (std::size_t i = 0; i < config.sparse_features; ++i) {
            if (!std::binary_search(sparse_missing[i].begin(), sparse_missing[i].end(), t)) {
                track.features[padded("decoy_sparse_", i, 1)] = track_rng.normal();
            }
        }
        normalize_track(track);
        out.truth.track_labels.emplace_back(track.track_id, label);
        out.tracks.push_back(std::move(track));
    }
    return out;
}

void write_truth_jsonl(std::ostream& out, const GroundTruth& truth) {
    for (const auto& [id, label] : truth.track_labels) {
        out << canonical_dump(Json{{"track_id", id}, {"planted_label", label}}) << '\n';
    }
}

GroundTruth load_truth_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::IoError, "cannot open '" + path.string() + "' for reading");
    GroundTruth truth;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const Json j = parse_json(line, line_no);
        if (!j.is_object() || !j.contains("track_id") || !j.contains("planted_label") || !j["track_id"].is_string() ||
            !j["planted_label"].is_number_unsigned()) {
            throw Error(ErrorKind::ParseError, "truth record needs track_id and planted_label", line_no);
        }
        truth.track_labels.emplace_back(j["track_id"].get<std::string>(), j["planted_label"].get<std::size_t>());
    }
    return truth;
}

std::filesystem::path truth_path_for(const std::filesystem::path& dataset_path) {
    auto out = dataset_path;
    out.replace_extension(".truth.jsonl");
    return out;
}

}  // namespace msdrec
