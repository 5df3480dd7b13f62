#include "msdrec/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "msdrec/error.hpp"
#include "msdrec/parallel.hpp"
#include "msdrec/serialize.hpp"

namespace msdrec {

namespace {

constexpr const char* kMetadataColumns[] = {"track_id", "artist_id", "artist_name", "title", "artist_terms",
                                            "similar_artists"};

bool is_metadata_column(std::string_view name) {
    return std::find(std::begin(kMetadataColumns), std::end(kMetadataColumns), name) != std::end(kMetadataColumns);
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::IoError, "cannot open '" + path.string() + "' for reading");
    return in;
}

bool is_blank(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

void strip_cr(std::string& line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
}

void read_jsonl(std::istream& in, const std::function<void(TrackRecord&&)>& sink) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        if (is_blank(line)) continue;
        try {
            sink(track_from_json(parse_json(line)));
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::ParseError && !e.line()) {
                throw Error(ErrorKind::ParseError, e.what(), line_no);
            }
            throw;
        }
    }
    if (in.bad()) throw Error(ErrorKind::IoError, "read failure");
}

/// Reads one logical CSV record (quoted fields may span lines). Returns false at EOF.
bool read_csv_record(std::istream& in, std::vector<std::string>& fields, std::size_t& line_no) {
    fields.clear();
    std::string line;
    if (!std::getline(in, line)) return false;
    ++line_no;
    const std::size_t start_line = line_no;
    std::string field;
    bool in_quotes = false;
    for (;;) {
        strip_cr(line);
        for (std::size_t i = 0; i < line.size(); ++i) {
            const char c = line[i];
            if (in_quotes) {
                if (c == '"') {
                    if (i + 1 < line.size() && line[i + 1] == '"') {
                        field += '"';
                        ++i;
                    } else {
                        in_quotes = false;
                    }
                } else {
                    field += c;
                }
            } else if (c == '"') {
                in_quotes = true;
            } else if (c == ',') {
                fields.push_back(std::move(field));
                field.clear();
            } else {
                field += c;
            }
        }
        if (!in_quotes) break;
        field += '\n';
        if (!std::getline(in, line)) {
            throw Error(ErrorKind::ParseError, "unterminated quoted field", start_line);
        }
        ++line_no;
    }
    fields.push_back(std::move(field));
    return true;
}

std::vector<std::string> split_list(const std::string& cell) {
    std::vector<std::string> out;
    if (cell.empty()) return out;
    std::size_t start = 0;
    for (;;) {
        const auto bar = cell.find('|', start);
        auto item = cell.substr(start, bar == std::string::npos ? std::string::npos : bar - start);
        if (!item.empty()) out.push_back(std::move(item));
        if (bar == std::string::npos) break;
        start = bar + 1;
    }
    return out;
}

std::optional<double> parse_number(std::string_view cell) {
    double value = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    if (first != last && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) return std::nullopt;
    return value;
}

void read_csv(std::istream& in, const std::function<void(TrackRecord&&)>& sink) {
    std::vector<std::string> header;
    std::size_t line_no = 0;
    if (!read_csv_record(in, header, line_no)) throw Error(ErrorKind::SchemaError, "CSV file has no header row");
    std::unordered_map<std::string, std::size_t> column;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (!column.emplace(header[i], i).second) {
            throw Error(ErrorKind::SchemaError, "duplicate CSV column '" + header[i] + "'");
        }
    }
    for (const char* required : {"track_id", "artist_id"}) {
        if (!column.contains(required)) {
            throw Error(ErrorKind::SchemaError, std::string("CSV header is missing required column '") + required + "'");
        }
    }
    auto cell = [&](const std::vector<std::string>& row, const char* name) -> std::string {
        auto it = column.find(name);
        return it == column.end() ? std::string{} : row[it->second];
    };

    std::vector<std::string> row;
    for (;;) {
        const std::size_t record_line = line_no + 1;
        if (!read_csv_record(in, row, line_no)) break;
        if (row.size() == 1 && is_blank(row[0])) continue;
        if (row.size() != header.size()) {
            throw Error(ErrorKind::ParseError,
                        "expected " + std::to_string(header.size()) + " cells, found " + std::to_string(row.size()),
                        record_line);
        }
        TrackRecord t;
        t.track_id = cell(row, "track_id");
        t.artist_id = cell(row, "artist_id");
        t.artist_name = cell(row, "artist_name");
        t.title = cell(row, "title");
        t.artist_terms = split_list(cell(row, "artist_terms"));
        t.similar_artists = split_list(cell(row, "similar_artists"));
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (is_metadata_column(header[i])) continue;
            const std::string& value = row[i];
            if (value.empty()) {
                t.features[header[i]] = std::nullopt;
            } else if (auto number = parse_number(value)) {
                t.features[header[i]] = *number;
            } else {
                t.text_features[header[i]] = value;
            }
        }
        normalize_track(t);
        try {
            validate_track(t);
        } catch (const Error& e) {
            throw Error(ErrorKind::ParseError, e.what(), record_line);
        }
        sink(std::move(t));
    }
    if (in.bad()) throw Error(ErrorKind::IoError, "read failure");
}

void check_unique(const std::vector<TrackRecord>& records) {
    std::unordered_set<std::string_view> seen;
    seen.reserve(records.size());
    for (const auto& r : records) {
        if (!seen.insert(r.track_id).second) throw Error(ErrorKind::DuplicateTrackId, r.track_id);
    }
}

std::string csv_escape(const std::string& cell) {
    if (cell.find_first_of(",\"\n\r") == std::string::npos) return cell;
    std::string out = "\"";
    for (char c : cell) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string join_list(const std::vector<std::string>& items) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (items[i].find('|') != std::string::npos) {
            throw Error(ErrorKind::InvalidArgument, "list item '" + items[i] + "' contains '|' and cannot be written as CSV");
        }
        if (i) out += '|';
        out += items[i];
    }
    return out;
}

std::string format_double(double v) {
    return canonical_dump(Json(v));
}

}  // namespace

DataFormat format_from_path(const std::filesystem::path& path) noexcept {
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext == ".csv" ? DataFormat::Csv : DataFormat::Jsonl;
}

void for_each_record(const std::filesystem::path& path, DataFormat format,
                     const std::function<void(TrackRecord&&)>& sink) {
    auto in = open_input(path);
    if (format == DataFormat::Jsonl) {
        read_jsonl(in, sink);
    } else {
        read_csv(in, sink);
    }
}

std::vector<TrackRecord> load_dataset(const std::filesystem::path& path, DataFormat format) {
    std::vector<TrackRecord> records;
    std::unordered_set<std::string> seen;
    for_each_record(path, format, [&](TrackRecord&& r) {
        if (!seen.insert(r.track_id).second) throw Error(ErrorKind::DuplicateTrackId, r.track_id);
        records.push_back(std::move(r));
    });
    return records;
}

std::vector<TrackRecord> load_dataset(const std::filesystem::path& path) {
    return load_dataset(path, format_from_path(path));
}

std::vector<TrackRecord> load_datasets(std::vector<std::filesystem::path> paths, unsigned workers) {
    std::sort(paths.begin(), paths.end());
    std::vector<std::vector<TrackRecord>> parts(paths.size());
    parallel::for_each_chunk(
        paths.size(), workers,
        [&](std::size_t, std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i) parts[i] = load_dataset(paths[i]);
        },
        1);
    std::vector<TrackRecord> merged;
    for (auto& part : parts) {
        std::move(part.begin(), part.end(), std::back_inserter(merged));
    }
    check_unique(merged);
    return merged;
}

void write_jsonl(std::ostream& out, std::span<const TrackRecord> records) {
    for (const auto& r : records) out << canonical_dump(to_json(r)) << '\n';
}

void write_csv(std::ostream& out, std::span<const TrackRecord> records) {
    std::set<std::string> feature_names;
    for (const auto& r : records) {
        if (r.segments) {
            throw Error(ErrorKind::InvalidArgument, "track " + r.track_id + " has raw segments; summarize before CSV export");
        }
        for (const auto& [name, _] : r.features) feature_names.insert(name);
        for (const auto& [name, _] : r.text_features) feature_names.insert(name);
    }
    for (const auto& name : feature_names) {
        if (is_metadata_column(name)) {
            throw Error(ErrorKind::InvalidArgument, "feature name '" + name + "' collides with a metadata column");
        }
    }

    bool first = true;
    auto put = [&](const std::string& cell) {
        if (!first) out << ',';
        first = false;
        out << csv_escape(cell);
    };
    for (const char* col : kMetadataColumns) put(col);
    for (const auto& name : feature_names) put(name);
    out << '\n';

    for (const auto& r : records) {
        first = true;
        put(r.track_id);
        put(r.artist_id);
        put(r.artist_name);
        put(r.title);
        put(join_list(r.artist_terms));
        put(join_list(r.similar_artists));
        for (const auto& name : feature_names) {
            if (auto it = r.features.find(name); it != r.features.end()) {
                put(it->second ? format_double(*it->second) : std::string{});
            } else if (auto tt = r.text_features.find(name); tt != r.text_features.end()) {
                put(tt->second);
            } else {
                put({});
            }
        }
        out << '\n';
    }
}

void save_dataset(const std::filesystem::path& path, std::span<const TrackRecord> records, DataFormat format) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::IoError, "cannot open '" + path.string() + "' for writing");
    if (format == DataFormat::Jsonl) {
        write_jsonl(out, records);
    } else {
        write_csv(out, records);
    }
    out.flush();
    if (!out) throw Error(ErrorKind::IoError, "write failure on '" + path.string() + "'");
}

std::map<std::string, double> summarize_segments(const SegmentSequence& seq) {
    std::map<std::string, double> out;
    const std::size_t steps = seq.timbre.size();
    out["segments_count"] = static_cast<double>(steps);
    if (steps == 0) return out;

    const std::size_t w = seq.width();
    std::vector<double> sums(w, 0.0);
    for (const auto& step : seq.timbre) {
        for (std::size_t j = 0; j < w; ++j) sums[j] += step[j];
    }
    for (std::size_t j = 0; j < w; ++j) {
        out["timbre_mean_" + std::to_string(j)] = sums[j] / static_cast<double>(steps);
    }
    if (seq.confidence && !seq.confidence->empty()) {
        double total = 0.0;
        for (double c : *seq.confidence) total += c;
        out["segments_confidence_mean"] = total / static_cast<double>(seq.confidence->size());
    }
    return out;
}

void summarize_records(std::vector<TrackRecord>& records) {
    for (auto& r : records) {
        if (!r.segments) continue;
        for (auto& [name, value] : summarize_segments(*r.segments)) r.features[name] = value;
        r.segments.reset();
    }
}

void RunningStats::add(double x) noexcept {
    if (count == 0) {
        min = max = x;
    } else {
        min = std::min(min, x);
        max = std::max(max, x);
    }
    ++count;
    const double delta = x - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (x - mean);
}

RunningStats RunningStats::merge(const RunningStats& a, const RunningStats& b) noexcept {
    if (a.count == 0) return b;
    if (b.count == 0) return a;
    RunningStats out;
    out.count = a.count + b.count;
    const double na = static_cast<double>(a.count);
    const double nb = static_cast<double>(b.count);
    const double n = static_cast<double>(out.count);
    const double delta = b.mean - a.mean;
    out.mean = a.mean + delta * (nb / n);
    out.m2 = a.m2 + b.m2 + delta * delta * (na * nb / n);
    out.min = std::min(a.min, b.min);
    out.max = std::max(a.max, b.max);
    return out;
}

std::vector<FeatureStats> compute_stats(std::span<const TrackRecord> records, unsigned workers) {
    if (records.empty()) throw Error(ErrorKind::EmptyDataset, "cannot compute statistics of an empty dataset");

    std::set<std::string> name_set;
    for (const auto& r : records) {
        for (const auto& [name, _] : r.features) name_set.insert(name);
        for (const auto& [name, _] : r.text_features) name_set.insert(name);
    }
    const std::vector<std::string> names(name_set.begin(), name_set.end());
    std::unordered_map<std::string_view, std::size_t> slot;
    for (std::size_t i = 0; i < names.size(); ++i) slot.emplace(names[i], i);

    struct Partial {
        std::vector<RunningStats> numeric;
        std::vector<std::size_t> text;
    };
    const std::size_t chunks = parallel::chunk_count(records.size());
    std::vector<Partial> partials(chunks);
    parallel::for_each_chunk(records.size(), workers, [&](std::size_t c, std::size_t begin, std::size_t end) {
        Partial p{std::vector<RunningStats>(names.size()), std::vector<std::size_t>(names.size(), 0)};
        for (std::size_t i = begin; i < end; ++i) {
            for (const auto& [name, value] : records[i].features) {
                if (value) p.numeric[slot.at(name)].add(*value);
            }
            for (const auto& [name, _] : records[i].text_features) ++p.text[slot.at(name)];
        }
        partials[c] = std::move(p);
    });

    // Fixed merge tree: combine neighbours level by level.
    while (partials.size() > 1) {
        std::vector<Partial> next;
        next.reserve((partials.size() + 1) / 2);
        for (std::size_t i = 0; i < partials.size(); i += 2) {
            if (i + 1 == partials.size()) {
                next.push_back(std::move(partials[i]));
                continue;
            }
            Partial merged = std::move(partials[i]);
            for (std::size_t f = 0; f < names.size(); ++f) {
                merged.numeric[f] = RunningStats::merge(merged.numeric[f], partials[i + 1].numeric[f]);
                merged.text[f] += partials[i + 1].text[f];
            }
            next.push_back(std::move(merged));
        }
        partials = std::move(next);
    }

    std::vector<FeatureStats> out;
    out.reserve(names.size());
    const auto& total = partials.front();
    for (std::size_t f = 0; f < names.size(); ++f) {
        FeatureStats s;
        s.feature_name = names[f];
        const auto& acc = total.numeric[f];
        if (total.text[f] > 0) {
            s.numeric = false;
            s.count_present = acc.count + total.text[f];
        } else {
            s.count_present = acc.count;
            s.mean = acc.count ? acc.mean : 0.0;
            s.variance = acc.population_variance();
            s.min = acc.count ? acc.min : 0.0;
            s.max = acc.count ? acc.max : 0.0;
        }
        s.count_missing = records.size() - s.count_present;
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace msdrec
