#include "msdrec/serialize.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>

#include "msdrec/error.hpp"

namespace msdrec {

namespace {

void append_double(std::string& out, double v) {
    if (!std::isfinite(v)) {
        out += "null";
        return;
    }
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    std::string_view text(buf, static_cast<std::size_t>(end - buf));
    out += text;
    // Keep integral doubles typed as floats on re-parse.
    if (text.find_first_of(".eE") == std::string_view::npos) out += ".0";
}

void emit(std::string& out, const Json& v) {
    switch (v.type()) {
        case Json::value_t::object: {
            out += '{';
            bool first = true;
            for (auto it = v.begin(); it != v.end(); ++it) {
                if (!first) out += ',';
                first = false;
                out += Json(it.key()).dump();
                out += ':';
                emit(out, it.value());
            }
            out += '}';
            break;
        }
        case Json::value_t::array: {
            out += '[';
            for (std::size_t i = 0; i < v.size(); ++i) {
                if (i) out += ',';
                emit(out, v[i]);
            }
            out += ']';
            break;
        }
        case Json::value_t::number_float:
            append_double(out, v.get<double>());
            break;
        default:
            out += v.dump();
            break;
    }
}

[[noreturn]] void malformed(const std::string& what) { throw Error(ErrorKind::ParseError, what); }

template <typename Fn>
auto wrap_json_errors(const char* what, Fn&& fn) {
    try {
        return fn();
    } catch (const nlohmann::json::exception& e) {
        malformed(std::string(what) + ": " + e.what());
    }
}

const Json& require(const Json& j, const char* key) {
    if (!j.is_object()) malformed("expected a JSON object");
    auto it = j.find(key);
    if (it == j.end()) malformed(std::string("missing field '") + key + "'");
    return *it;
}

std::string optional_string(const Json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return {};
    if (!it->is_string()) malformed(std::string("field '") + key + "' must be a string");
    return it->get<std::string>();
}

std::vector<std::string> optional_string_list(const Json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return {};
    if (!it->is_array()) malformed(std::string("field '") + key + "' must be an array of strings");
    std::vector<std::string> out;
    for (const auto& e : *it) {
        if (!e.is_string()) malformed(std::string("field '") + key + "' must be an array of strings");
        out.push_back(e.get<std::string>());
    }
    return out;
}

std::vector<double> number_list(const Json& j, const char* what) {
    if (!j.is_array()) malformed(std::string(what) + " must be an array of numbers");
    std::vector<double> out;
    out.reserve(j.size());
    for (const auto& e : j) {
        if (!e.is_number()) malformed(std::string(what) + " must be an array of numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

Matrix matrix_from_rows(const Json& j, std::size_t expected_cols, const char* what) {
    if (!j.is_array()) malformed(std::string(what) + " must be an array of rows");
    std::vector<double> data;
    data.reserve(j.size() * expected_cols);
    for (const auto& row : j) {
        auto values = number_list(row, what);
        if (values.size() != expected_cols) malformed(std::string(what) + " row width does not match the schema");
        data.insert(data.end(), values.begin(), values.end());
    }
    return Matrix(j.size(), expected_cols, std::move(data));
}

Json rows_to_json(const Matrix& m) {
    Json rows = Json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        auto r = m.row(i);
        rows.push_back(Json(std::vector<double>(r.begin(), r.end())));
    }
    return rows;
}

}  // namespace

std::string canonical_dump(const Json& value) {
    std::string out;
    emit(out, value);
    return out;
}

Json parse_json(std::string_view text, std::optional<std::size_t> line) {
    try {
        return Json::parse(text.begin(), text.end());
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorKind::ParseError, e.what(), line);
    }
}

std::string fnv1a_hex(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

Json to_json(const SegmentSequence& seq) {
    Json j = Json::object();
    j["timbre"] = Json::array();
    for (const auto& step : seq.timbre) j["timbre"].push_back(Json(step));
    if (seq.confidence) j["confidence"] = Json(*seq.confidence);
    return j;
}

SegmentSequence segments_from_json(const Json& j) {
    return wrap_json_errors("segments", [&] {
        SegmentSequence seq;
        const auto& timbre = require(j, "timbre");
        if (!timbre.is_array()) malformed("segments.timbre must be an array");
        for (const auto& step : timbre) seq.timbre.push_back(number_list(step, "segments.timbre"));
        if (auto it = j.find("confidence"); it != j.end() && !it->is_null()) {
            seq.confidence = number_list(*it, "segments.confidence");
        }
        return seq;
    });
}

Json to_json(const TrackRecord& t) {
    Json j = Json::object();
    j["track_id"] = t.track_id;
    j["artist_id"] = t.artist_id;
    j["artist_name"] = t.artist_name;
    j["title"] = t.title;
    j["artist_terms"] = t.artist_terms;
    j["similar_artists"] = t.similar_artists;
    Json features = Json::object();
    for (const auto& [name, value] : t.features) features[name] = value ? Json(*value) : Json(nullptr);
    for (const auto& [name, value] : t.text_features) features[name] = value;
    j["features"] = std::move(features);
    if (t.segments) j["segments"] = to_json(*t.segments);
    return j;
}

TrackRecord track_from_json(const Json& j) {
    TrackRecord t = wrap_json_errors("record", [&] {
        TrackRecord t;
        const auto& id = require(j, "track_id");
        if (!id.is_string()) malformed("track_id must be a string");
        t.track_id = id.get<std::string>();
        const auto& artist = require(j, "artist_id");
        if (!artist.is_string()) malformed("artist_id must be a string");
        t.artist_id = artist.get<std::string>();
        t.artist_name = optional_string(j, "artist_name");
        t.title = optional_string(j, "title");
        t.artist_terms = optional_string_list(j, "artist_terms");
        t.similar_artists = optional_string_list(j, "similar_artists");
        if (auto it = j.find("features"); it != j.end() && !it->is_null()) {
            if (!it->is_object()) malformed("features must be an object");
            for (auto f = it->begin(); f != it->end(); ++f) {
                if (f->is_null()) {
                    t.features[f.key()] = std::nullopt;
                } else if (f->is_number()) {
                    t.features[f.key()] = f->get<double>();
                } else if (f->is_string()) {
                    t.text_features[f.key()] = f->get<std::string>();
                } else {
                    malformed("feature '" + f.key() + "' must be a number, string or null");
                }
            }
        }
        if (auto it = j.find("segments"); it != j.end() && !it->is_null()) t.segments = segments_from_json(*it);
        return t;
    });
    normalize_track(t);
    try {
        validate_track(t);
    } catch (const Error& e) {
        malformed(e.what());
    }
    return t;
}

Json to_json(const SelectionSummary& s) {
    return Json{{"manual", s.manual}, {"non_numeric", s.non_numeric}, {"sparse", s.sparse}, {"zero_variance", s.zero_variance}};
}

SelectionSummary selection_summary_from_json(const Json& j) {
    return wrap_json_errors("provenance", [&] {
        SelectionSummary s;
        s.manual = require(j, "manual").get<std::size_t>();
        s.non_numeric = require(j, "non_numeric").get<std::size_t>();
        s.sparse = require(j, "sparse").get<std::size_t>();
        s.zero_variance = require(j, "zero_variance").get<std::size_t>();
        return s;
    });
}

Json to_json(const FeatureSchema& schema) {
    return Json{{"feature_names", schema.feature_names},
                {"scaler_mean", schema.scaler_mean},
                {"scaler_std", schema.scaler_std},
                {"provenance", to_json(schema.provenance)}};
}

FeatureSchema schema_from_json(const Json& j) {
    FeatureSchema schema = wrap_json_errors("schema", [&] {
        FeatureSchema s;
        s.feature_names = require(j, "feature_names").get<std::vector<std::string>>();
        s.scaler_mean = number_list(require(j, "scaler_mean"), "scaler_mean");
        s.scaler_std = number_list(require(j, "scaler_std"), "scaler_std");
        s.provenance = selection_summary_from_json(require(j, "provenance"));
        return s;
    });
    validate_schema(schema);
    return schema;
}

Json to_json(const FeatureMatrix& m) {
    return Json{{"schema", to_json(*m.schema)}, {"rows", rows_to_json(m.rows)}, {"row_ids", m.row_ids}};
}

FeatureMatrix feature_matrix_from_json(const Json& j) {
    return wrap_json_errors("feature matrix", [&] {
        FeatureMatrix m;
        m.schema = std::make_shared<const FeatureSchema>(schema_from_json(require(j, "schema")));
        m.rows = matrix_from_rows(require(j, "rows"), m.schema->dimension(), "rows");
        m.row_ids = require(j, "row_ids").get<std::vector<std::string>>();
        if (m.row_ids.size() != m.rows.rows()) malformed("row_ids length does not match rows");
        return m;
    });
}

Json to_json(const KMeansModel& model) {
    return Json{{"k", model.k},
                {"centroids", rows_to_json(model.centroids)},
                {"schema", to_json(*model.schema)},
                {"inertia", model.inertia},
                {"iterations_run", model.iterations_run},
                {"seed", model.seed},
                {"converged", model.converged}};
}

KMeansModel model_from_json(const Json& j) {
    return wrap_json_errors("model", [&] {
        KMeansModel model;
        model.schema = std::make_shared<const FeatureSchema>(schema_from_json(require(j, "schema")));
        model.k = require(j, "k").get<std::size_t>();
        model.centroids = matrix_from_rows(require(j, "centroids"), model.schema->dimension(), "centroids");
        if (model.k == 0 || model.centroids.rows() != model.k) malformed("centroid count does not match k");
        model.inertia = require(j, "inertia").get<double>();
        if (!std::isfinite(model.inertia) || model.inertia < 0.0) malformed("inertia must be finite and >= 0");
        model.iterations_run = require(j, "iterations_run").get<std::size_t>();
        model.seed = require(j, "seed").get<std::uint64_t>();
        model.converged = require(j, "converged").get<bool>();
        return model;
    });
}

Json to_json(const ClusterIndex& index) {
    return Json{{"model_id", index.model_id}, {"assignments", index.assignments}, {"members", index.members}};
}

ClusterIndex cluster_index_from_json(const Json& j) {
    return wrap_json_errors("cluster index", [&] {
        ClusterIndex index;
        index.model_id = require(j, "model_id").get<std::string>();
        index.assignments = require(j, "assignments").get<std::map<std::string, std::size_t>>();
        index.members = require(j, "members").get<std::vector<std::vector<std::string>>>();
        std::size_t total = 0;
        for (std::size_t c = 0; c < index.members.size(); ++c) {
            for (const auto& id : index.members[c]) {
                auto it = index.assignments.find(id);
                if (it == index.assignments.end() || it->second != c) malformed("members disagree with assignments");
                ++total;
            }
        }
        if (total != index.assignments.size()) malformed("members do not partition the assignments");
        return index;
    });
}

Json to_json(const FeatureStats& s) {
    return Json{{"feature_name", s.feature_name}, {"count_present", s.count_present},
                {"count_missing", s.count_missing}, {"mean", s.mean},
                {"variance", s.variance}, {"min", s.min},
                {"max", s.max}, {"numeric", s.numeric}};
}

FeatureStats feature_stats_from_json(const Json& j) {
    return wrap_json_errors("feature stats", [&] {
        FeatureStats s;
        s.feature_name = require(j, "feature_name").get<std::string>();
        s.count_present = require(j, "count_present").get<std::size_t>();
        s.count_missing = require(j, "count_missing").get<std::size_t>();
        s.mean = require(j, "mean").get<double>();
        s.variance = require(j, "variance").get<double>();
        s.min = require(j, "min").get<double>();
        s.max = require(j, "max").get<double>();
        s.numeric = require(j, "numeric").get<bool>();
        return s;
    });
}

Json to_json(const SelectionReport& report) {
    Json dropped = Json::array();
    for (const auto& d : report.dropped) {
        dropped.push_back(Json{{"feature_name", d.feature_name}, {"reason", std::string(drop_reason_name(d.reason))}});
    }
    return Json{{"kept", report.kept}, {"dropped", std::move(dropped)}};
}

SelectionReport selection_report_from_json(const Json& j) {
    return wrap_json_errors("selection report", [&] {
        SelectionReport report;
        report.kept = require(j, "kept").get<std::vector<std::string>>();
        for (const auto& d : require(j, "dropped")) {
            auto reason = parse_drop_reason(require(d, "reason").get<std::string>());
            if (!reason) malformed("unknown drop reason");
            report.dropped.push_back({require(d, "feature_name").get<std::string>(), *reason});
        }
        return report;
    });
}

Json to_json(const Recommendation& r) {
    return Json{{"track_id", r.track_id},         {"artist_id", r.artist_id},
                {"title", r.title},               {"artist_name", r.artist_name},
                {"source_cluster", r.source_cluster}, {"artist_support", r.artist_support},
                {"genre_overlap", r.genre_overlap}};
}

Recommendation recommendation_from_json(const Json& j) {
    return wrap_json_errors("recommendation", [&] {
        Recommendation r;
        r.track_id = require(j, "track_id").get<std::string>();
        r.artist_id = require(j, "artist_id").get<std::string>();
        r.title = require(j, "title").get<std::string>();
        r.artist_name = require(j, "artist_name").get<std::string>();
        r.source_cluster = require(j, "source_cluster").get<std::size_t>();
        r.artist_support = require(j, "artist_support").get<std::size_t>();
        r.genre_overlap = require(j, "genre_overlap").get<double>();
        return r;
    });
}

std::string model_id(const KMeansModel& model) { return fnv1a_hex(canonical_dump(to_json(model))); }

}  // namespace msdrec
