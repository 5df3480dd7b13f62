#include "msdrec/cli.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "msdrec/clustering.hpp"
#include "msdrec/datagen.hpp"
#include "msdrec/error.hpp"
#include "msdrec/features.hpp"
#include "msdrec/ingest.hpp"
#include "msdrec/model_file.hpp"
#include "msdrec/random.hpp"
#include "msdrec/recommend.hpp"
#include "msdrec/serialize.hpp"

namespace msdrec::cli {

namespace fs = std::filesystem;

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = s.find(sep, start);
        out.emplace_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::optional<std::size_t> parse_count(std::string_view s) {
    std::size_t value = 0;
    const auto t = trim(s);
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) return std::nullopt;
    return value;
}

std::optional<std::pair<std::size_t, std::size_t>> parse_range(std::string_view s) {
    const auto dots = s.find("..");
    if (dots == std::string_view::npos) return std::nullopt;
    auto lo = parse_count(s.substr(0, dots));
    auto hi = parse_count(s.substr(dots + 2));
    if (!lo || !hi) return std::nullopt;
    return std::pair{*lo, *hi};
}

/// Expands comma-separated list flags (`--drop a,b --drop c`).
std::vector<std::string> expand_list(const std::vector<std::string>& raw) {
    std::vector<std::string> out;
    for (const auto& item : raw) {
        for (auto& part : split(item, ',')) {
            auto t = trim(part);
            if (!t.empty()) out.push_back(std::move(t));
        }
    }
    return out;
}

std::ofstream open_output(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::IoError, "cannot open '" + path.string() + "' for writing");
    return out;
}

/// Writes to the file when a path is given, else to `fallback`.
template <typename Fn>
void emit_to(const std::string& path, std::ostream& fallback, Fn&& write) {
    if (path.empty() || path == "-") {
        write(fallback);
        return;
    }
    auto out = open_output(path);
    write(out);
    out.flush();
    if (!out) throw Error(ErrorKind::IoError, "write failure on '" + path + "'");
}

struct DataOptions {
    std::vector<std::string> paths;
    std::string format = "auto";

    void attach(CLI::App* cmd, const std::string& format_flag = "--format") {
        cmd->add_option("--data", paths, "Dataset file(s); JSONL or CSV")->required();
        cmd->add_option(format_flag, format, "Input format")->check(CLI::IsMember({"auto", "jsonl", "csv"}))->capture_default_str();
    }

    std::vector<TrackRecord> load(unsigned workers) const {
        std::vector<TrackRecord> records;
        if (format == "auto") {
            std::vector<fs::path> files(paths.begin(), paths.end());
            records = load_datasets(std::move(files), workers);
        } else {
            const DataFormat f = format == "csv" ? DataFormat::Csv : DataFormat::Jsonl;
            std::vector<std::string> sorted = paths;
            std::sort(sorted.begin(), sorted.end());
            std::set<std::string> seen;
            for (const auto& p : sorted) {
                for (auto& r : load_dataset(p, f)) {
                    if (!seen.insert(r.track_id).second) throw Error(ErrorKind::DuplicateTrackId, r.track_id);
                    records.push_back(std::move(r));
                }
            }
        }
        summarize_records(records);
        return records;
    }
};

struct SelectionOptions {
    SelectionConfig config;
    std::vector<std::string> drop;
    std::vector<std::string> keep;

    void attach(CLI::App* cmd) {
        cmd->add_option("--variance-epsilon", config.variance_epsilon, "Drop features with variance below this")
            ->capture_default_str();
        cmd->add_option("--max-missing", config.max_missing_fraction, "Drop features missing from more than this fraction")
            ->capture_default_str();
        cmd->add_option("--drop", drop, "Features to drop (comma-separated, repeatable)");
        cmd->add_option("--keep", keep, "Features exempt from automatic drops");
    }

    SelectionConfig resolved() const {
        SelectionConfig c = config;
        c.manual_drop = expand_list(drop);
        c.manual_keep = expand_list(keep);
        return c;
    }
};

struct FitOptions {
    FitConfig config;
    std::string variant = "lloyd";

    void attach(CLI::App* cmd, bool with_k) {
        if (with_k) cmd->add_option("--k", config.k, "Number of clusters")->required()->check(CLI::PositiveNumber);
        cmd->add_option("--max-iter", config.max_iterations, "Iteration cap per restart")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        cmd->add_option("--tol", config.tolerance, "Relative centroid-shift tolerance")
            ->check(CLI::NonNegativeNumber)
            ->capture_default_str();
        cmd->add_option("--n-init", config.n_init, "Independent restarts")->check(CLI::PositiveNumber)->capture_default_str();
        cmd->add_option("--variant", variant, "Fit algorithm")->check(CLI::IsMember({"lloyd", "minibatch"}))->capture_default_str();
        cmd->add_option("--batch-size", config.batch_size, "Mini-batch size")->check(CLI::PositiveNumber)->capture_default_str();
    }

    FitConfig resolved(std::uint64_t seed, unsigned workers) const {
        FitConfig c = config;
        c.seed = seed;
        c.workers = workers;
        c.variant = variant == "minibatch" ? FitVariant::MiniBatch : FitVariant::Lloyd;
        return c;
    }
};

struct Common {
    std::uint64_t seed = 0;
    unsigned workers = 0;

    void attach(CLI::App* cmd, bool with_seed = true) {
        if (with_seed) cmd->add_option("--seed", seed, "Seed for every randomized step")->capture_default_str();
        cmd->add_option("--workers", workers, "Thread cap (0 = all cores); never changes results")->capture_default_str();
    }
};

// ---------------------------------------------------------------- commands

void cmd_gen(const GenConfig& config, const std::string& out_path, std::ostream& out) {
    const auto data = generate(config);
    const fs::path path(out_path);
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    save_dataset(path, data.tracks, format_from_path(path));
    const auto truth_path = truth_path_for(path);
    auto truth = open_output(truth_path);
    write_truth_jsonl(truth, data.truth);
    out << "wrote " << data.tracks.size() << " tracks to " << path.string() << " and " << truth_path.string() << '\n';
}

void cmd_analyze(const DataOptions& data, const Common& common, const std::string& out_path, std::ostream& out) {
    const auto records = data.load(common.workers);
    Json stats = Json::array();
    for (const auto& s : compute_stats(records, common.workers)) stats.push_back(to_json(s));
    emit_to(out_path, out, [&](std::ostream& o) { o << canonical_dump(stats) << '\n'; });
}

void cmd_select(const DataOptions& data, const SelectionOptions& selection, const Common& common,
                const std::string& out_path, std::ostream& out) {
    const auto records = data.load(common.workers);
    const auto stats = compute_stats(records, common.workers);
    const auto report = select_features(stats, selection.resolved());
    emit_to(out_path, out, [&](std::ostream& o) { o << canonical_dump(to_json(report)) << '\n'; });
}

void cmd_train(const DataOptions& data, const SelectionOptions& selection, const FitOptions& fit, const Common& common,
               const std::string& model_out, const std::string& trace_out, const std::string& created_at,
               std::ostream& out) {
    const auto records = data.load(common.workers);
    auto prepared = prepare_features(records, selection.resolved(), common.workers);
    FitTrace trace;
    ModelFile file;
    file.model = kmeans_fit(prepared.matrix, fit.resolved(common.seed, common.workers), trace);
    file.selection_report = std::move(prepared.report);
    file.created_at = created_at.empty() ? utc_timestamp_now() : created_at;
    const fs::path path(model_out);
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    save_model_file(path, file);
    if (!trace_out.empty()) {
        auto t = open_output(trace_out);
        t << "iteration,inertia,max_shift\n";
        for (const auto& it : trace.iterations) {
            t << it.iteration << ',' << canonical_dump(Json(it.inertia)) << ',' << canonical_dump(Json(it.max_shift)) << '\n';
        }
    }
    out << "k=" << file.model.k << " features=" << file.model.schema->dimension()
        << " inertia=" << canonical_dump(Json(file.model.inertia)) << " iterations=" << file.model.iterations_run
        << " converged=" << (file.model.converged ? "true" : "false") << '\n';
}

/// Mean genre overlap of recommendations for `queries` seeded single-track queries.
double mean_query_overlap(const KMeansModel& model, const FeatureMatrix& matrix, std::span<const TrackRecord> records,
                          std::size_t queries, std::uint64_t seed, unsigned workers) {
    const auto index = build_index(model, matrix, workers);
    const TrackStore store(records);
    Rng rng(seed);
    double total = 0.0;
    for (std::size_t q = 0; q < queries; ++q) {
        const std::string id = records[rng.uniform_index(records.size())].track_id;
        const auto recs = recommend(model, index, store, std::span(&id, 1), RecommendConfig{});
        double mean = 0.0;
        for (const auto& r : recs) mean += r.genre_overlap;
        total += recs.empty() ? 0.0 : mean / static_cast<double>(recs.size());
    }
    return queries ? total / static_cast<double>(queries) : 0.0;
}

void cmd_sweep(const DataOptions& data, const SelectionOptions& selection, const FitOptions& fit, const Common& common,
               const std::string& k_spec, std::optional<std::size_t> sample_size, const std::string& csv_out,
               const std::string& tradeoff_out, std::size_t tradeoff_queries, std::ostream& out) {
    const auto k_values = parse_k_list(k_spec);
    const auto records = data.load(common.workers);
    const auto prepared = prepare_features(records, selection.resolved(), common.workers);
    const FitConfig base = fit.resolved(common.seed, common.workers);
    const auto reports = sweep_k(prepared.matrix, k_values, base, sample_size);
    emit_to(csv_out, out, [&](std::ostream& o) { write_sweep_csv(o, reports); });

    if (!tradeoff_out.empty()) {
        auto t = open_output(tradeoff_out);
        t << "k,silhouette,mean_genre_overlap,queries\n";
        for (const auto& r : reports) {
            FitConfig config = base;
            config.k = r.k;
            config.seed = r.seed;
            const auto model = kmeans_fit(prepared.matrix, config);
            const double overlap = mean_query_overlap(model, prepared.matrix, records, tradeoff_queries,
                                                      derive_seed(r.seed, {0x7265636fULL}), common.workers);
            t << r.k << ',' << canonical_dump(Json(r.silhouette)) << ',' << canonical_dump(Json(overlap)) << ','
              << tradeoff_queries << '\n';
        }
    }
}

void cmd_search(const DataOptions& data, const SelectionOptions& selection, const FitOptions& fit, const Common& common,
                const SearchPlan& plan, std::optional<std::size_t> sample_size, const std::string& out_dir,
                std::ostream& out) {
    validate_plan(plan);
    const auto records = data.load(common.workers);
    const auto result = staged_search(records, plan, selection.resolved(), fit.resolved(common.seed, common.workers),
                                      sample_size);
    for (const auto& stage : result.stages) {
        out << "stage " << stage.stage << " fraction=" << stage.fraction << " rows=" << stage.rows
            << " features=" << stage.selection.kept.size() << '\n';
        for (const auto& r : stage.reports) {
            out << "  k=" << r.k << " silhouette=" << canonical_dump(Json(r.silhouette)) << '\n';
        }
        if (!out_dir.empty()) {
            auto f = open_output(fs::path(out_dir) / ("stage_" + std::to_string(stage.stage) + ".csv"));
            write_sweep_csv(f, stage.reports);
        }
    }
    out << "best_k=" << result.best_k << '\n';
}

std::string join(const std::vector<std::string>& items, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += sep;
        out += items[i];
    }
    return out;
}

void cmd_recommend(const std::string& model_path, const DataOptions& data, const Common& common,
                   const std::vector<std::string>& inputs_raw, const RecommendConfig& config,
                   const std::string& format, std::ostream& out) {
    const auto inputs = expand_list(inputs_raw);
    if (inputs.empty()) throw Error(ErrorKind::ConfigError, "no --input track ids given");
    const auto file = load_model_file(model_path);
    const auto records = data.load(common.workers);
    const auto matrix = build_matrix(records, file.model.schema, common.workers);
    const auto index = build_index(file.model, matrix, common.workers);
    const TrackStore store(records);
    for (const auto& id : inputs) {
        if (!store.find(id) || !index.assignments.contains(id)) throw Error(ErrorKind::UnknownTrack, id);
    }
    const auto recs = recommend(file.model, index, store, inputs, config);

    if (format == "json") {
        Json arr = Json::array();
        for (const auto& r : recs) arr.push_back(to_json(r));
        out << canonical_dump(arr) << '\n';
        return;
    }
    std::set<std::string> input_terms;
    for (const auto& id : inputs) {
        const auto& terms = store.at(id).artist_terms;
        input_terms.insert(terms.begin(), terms.end());
    }
    const std::string input_col = join(inputs, ",");
    const std::string input_genres = join(std::vector<std::string>(input_terms.begin(), input_terms.end()), ", ");
    out << "input_track\tinput_genres\trec_track\trec_artist\trec_genres\tgenre_overlap\n";
    for (const auto& r : recs) {
        out << input_col << '\t' << input_genres << '\t' << r.track_id << '\t'
            << (r.artist_name.empty() ? r.artist_id : r.artist_name) << '\t' << join(store.at(r.track_id).artist_terms, ", ")
            << '\t' << canonical_dump(Json(r.genre_overlap)) << '\n';
    }
}

void cmd_export(const DataOptions& data, const Common& common, const std::string& out_path, const std::string& to,
                bool summarize) {
    std::vector<TrackRecord> records;
    if (data.format == "auto") {
        records = load_datasets(std::vector<fs::path>(data.paths.begin(), data.paths.end()), common.workers);
    } else {
        const DataFormat f = data.format == "csv" ? DataFormat::Csv : DataFormat::Jsonl;
        for (const auto& p : data.paths) {
            for (auto& r : load_dataset(p, f)) records.push_back(std::move(r));
        }
    }
    const DataFormat target = to == "auto" ? format_from_path(out_path) : (to == "csv" ? DataFormat::Csv : DataFormat::Jsonl);
    if (summarize || target == DataFormat::Csv) summarize_records(records);
    const fs::path path(out_path);
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    save_dataset(path, records, target);
}

}  // namespace

// ---------------------------------------------------------------- parsing helpers

std::vector<std::size_t> parse_k_list(std::string_view spec) {
    std::vector<std::size_t> out;
    for (const auto& part : split(spec, ',')) {
        const auto item = trim(part);
        if (auto range = parse_range(item)) {
            if (range->first > range->second) throw Error(ErrorKind::ConfigError, "empty k range '" + item + "'");
            for (std::size_t k = range->first; k <= range->second; ++k) out.push_back(k);
        } else if (auto k = parse_count(item)) {
            out.push_back(*k);
        } else {
            throw Error(ErrorKind::ConfigError, "cannot parse k value '" + item + "'");
        }
    }
    if (out.empty()) throw Error(ErrorKind::ConfigError, "empty k list");
    return out;
}

SearchStage parse_stage(std::string_view spec) {
    auto bad = [&](const std::string& why) -> SearchStage {
        throw Error(ErrorKind::PlanError, "bad stage '" + std::string(spec) + "': " + why);
    };
    const auto parts = split(spec, ':');
    if (parts.size() < 2) return bad("expected FRACTION:STRATEGY[...]");
    SearchStage stage;
    try {
        std::size_t used = 0;
        stage.fraction = std::stod(parts[0], &used);
        if (used != parts[0].size()) return bad("fraction is not a number");
    } catch (const std::exception&) {
        return bad("fraction is not a number");
    }
    const auto strategy = trim(parts[1]);
    if (strategy == "grid") {
        stage.strategy = SearchStrategy::Grid;
        if (parts.size() > 3) return bad("too many fields for a grid stage");
        if (parts.size() == 3 && !trim(parts[2]).empty()) {
            try {
                stage.k_candidates = parse_k_list(parts[2]);
            } catch (const Error& e) {
                return bad(e.what());
            }
        }
    } else if (strategy == "random") {
        stage.strategy = SearchStrategy::Random;
        if (parts.size() != 4) return bad("random stages need FRACTION:random:[LO..HI]:BUDGET");
        if (!trim(parts[2]).empty()) {
            auto range = parse_range(trim(parts[2]));
            if (!range) return bad("cannot parse k range");
            stage.k_range = range;
        }
        auto budget = parse_count(parts[3]);
        if (!budget) return bad("cannot parse budget");
        stage.budget = *budget;
    } else {
        return bad("strategy must be grid or random");
    }
    return stage;
}

SearchPlan parse_plan_json(std::string_view text) {
    const Json j = parse_json(text);
    auto bad = [](const std::string& why) -> SearchPlan { throw Error(ErrorKind::PlanError, why); };
    if (!j.is_object() || !j.contains("stages") || !j["stages"].is_array()) return bad("plan needs a 'stages' array");
    SearchPlan plan;
    try {
        plan.seed = j.value("seed", std::uint64_t{0});
        for (const auto& s : j["stages"]) {
            SearchStage stage;
            stage.fraction = s.at("fraction").get<double>();
            const auto strategy = s.at("strategy").get<std::string>();
            if (strategy == "grid") {
                stage.strategy = SearchStrategy::Grid;
            } else if (strategy == "random") {
                stage.strategy = SearchStrategy::Random;
            } else {
                return bad("strategy must be grid or random");
            }
            if (s.contains("k_candidates")) stage.k_candidates = s["k_candidates"].get<std::vector<std::size_t>>();
            if (s.contains("k_range")) {
                const auto range = s["k_range"].get<std::vector<std::size_t>>();
                if (range.size() != 2) return bad("k_range must be [lo, hi]");
                stage.k_range = std::pair{range[0], range[1]};
            }
            stage.budget = s.value("budget", std::size_t{0});
            if (s.contains("seed")) stage.seed = s["seed"].get<std::uint64_t>();
            plan.stages.push_back(std::move(stage));
        }
    } catch (const nlohmann::json::exception& e) {
        return bad(std::string("malformed plan: ") + e.what());
    }
    return plan;
}

// ---------------------------------------------------------------- entry point

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Content-based song recommendation: K-means over track features"};
    app.name("msdrec");
    app.require_subcommand(1);

    // gen
    auto* gen = app.add_subcommand("gen", "Generate a synthetic dataset with planted clusters");
    GenConfig gen_config;
    std::optional<std::size_t> gen_artists;
    std::string gen_out;
    gen->add_option("--tracks", gen_config.n_tracks, "Number of tracks")->capture_default_str();
    gen->add_option("--artists", gen_artists, "Number of artists (default: max(clusters, tracks/10))");
    gen->add_option("--clusters", gen_config.n_clusters_true, "Planted cluster count")->capture_default_str();
    gen->add_option("--features", gen_config.n_features, "Feature count")->capture_default_str();
    gen->add_option("--separation", gen_config.separation, "Center distance / within-cluster std")->capture_default_str();
    gen->add_option("--noise-features", gen_config.noise_features, "Features without cluster signal")->capture_default_str();
    gen->add_option("--genre-vocab", gen_config.genre_vocab_per_cluster, "Genre terms per cluster")->capture_default_str();
    gen->add_option("--terms-per-artist", gen_config.terms_per_artist, "Genre terms per artist")->capture_default_str();
    gen->add_option("--similar-per-artist", gen_config.similar_per_artist, "Similar-artist edges per artist")
        ->capture_default_str();
    gen->add_option("--missing-rate", gen_config.missing_rate, "Per-value missing probability")->capture_default_str();
    gen->add_option("--cluster-std", gen_config.cluster_std, "Within-cluster std")->capture_default_str();
    gen->add_option("--zero-variance-features", gen_config.zero_variance_features, "Constant decoy features")
        ->capture_default_str();
    gen->add_option("--sparse-features", gen_config.sparse_features, "Mostly-missing decoy features")->capture_default_str();
    gen->add_option("--sparse-missing", gen_config.sparse_missing_fraction, "Missing fraction of sparse decoys")
        ->capture_default_str();
    gen->add_flag("--segments", gen_config.with_segments, "Emit timbre segment sequences");
    gen->add_option("--seed", gen_config.seed, "Generator seed")->capture_default_str();
    gen->add_option("--out", gen_out, "Output dataset path (.jsonl or .csv)")->required();

    // analyze
    auto* analyze = app.add_subcommand("analyze", "Per-feature statistics as JSON");
    DataOptions analyze_data;
    Common analyze_common;
    std::string analyze_out;
    analyze_data.attach(analyze);
    analyze_common.attach(analyze, false);
    analyze->add_option("--out", analyze_out, "Output path (default stdout)");

    // select
    auto* select = app.add_subcommand("select", "Run feature selection and print the report as JSON");
    DataOptions select_data;
    SelectionOptions select_opts;
    Common select_common;
    std::string select_out;
    select_data.attach(select);
    select_opts.attach(select);
    select_common.attach(select, false);
    select->add_option("--out", select_out, "Output path (default stdout)");

    // train
    auto* train = app.add_subcommand("train", "Select features, scale, fit K-means and write a model file");
    DataOptions train_data;
    SelectionOptions train_sel;
    FitOptions train_fit;
    Common train_common;
    std::string model_out, trace_out, created_at;
    train_data.attach(train);
    train_sel.attach(train);
    train_fit.attach(train, true);
    train_common.attach(train);
    train->add_option("--model-out", model_out, "Model file path")->required();
    train->add_option("--trace-out", trace_out, "Iteration trace CSV of the winning restart");
    train->add_option("--created-at", created_at, "Override the model timestamp");

    // sweep
    auto* sweep = app.add_subcommand("sweep", "Silhouette and inertia for a list of k values");
    DataOptions sweep_data;
    SelectionOptions sweep_sel;
    FitOptions sweep_fit;
    Common sweep_common;
    std::string sweep_k_spec, sweep_csv, tradeoff_out;
    std::optional<std::size_t> sweep_sample;
    std::size_t tradeoff_queries = 50;
    sweep_data.attach(sweep);
    sweep_sel.attach(sweep);
    sweep_fit.attach(sweep, false);
    sweep_common.attach(sweep);
    sweep->add_option("--k", sweep_k_spec, "k values: 5, 2..8 or 2,4,8")->required();
    sweep->add_option("--sample-size", sweep_sample, "Points evaluated per silhouette")->check(CLI::PositiveNumber);
    sweep->add_option("--csv-out", sweep_csv, "Sweep CSV path (default stdout)");
    sweep->add_option("--tradeoff-out", tradeoff_out, "Also write k,silhouette,mean_genre_overlap CSV");
    sweep->add_option("--tradeoff-queries", tradeoff_queries, "Random queries per k for the trade-off table")
        ->capture_default_str();

    // search
    auto* search = app.add_subcommand("search", "Staged grid/random search for k on growing data fractions");
    DataOptions search_data;
    SelectionOptions search_sel;
    FitOptions search_fit;
    Common search_common;
    std::string plan_path, search_out_dir;
    std::vector<std::string> stage_specs;
    std::size_t k_min = 2, k_max = 10, random_budget = 3;
    std::optional<std::size_t> search_sample;
    search_data.attach(search);
    search_sel.attach(search);
    search_fit.attach(search, false);
    search_common.attach(search);
    search->add_option("--plan", plan_path, "Plan JSON file");
    search->add_option("--stage", stage_specs, "Stage spec FRACTION:grid[:KLIST] or FRACTION:random:[LO..HI]:BUDGET");
    search->add_option("--k-min", k_min, "Default plan: smallest k")->capture_default_str();
    search->add_option("--k-max", k_max, "Default plan: largest k")->capture_default_str();
    search->add_option("--random-budget", random_budget, "Default plan: final random-stage budget")->capture_default_str();
    search->add_option("--sample-size", search_sample, "Points evaluated per silhouette")->check(CLI::PositiveNumber);
    search->add_option("--out-dir", search_out_dir, "Directory for stage_<t>.csv reports");

    // recommend
    auto* rec = app.add_subcommand("recommend", "Recommend songs for input tracks");
    std::string model_path, rec_format = "table";
    DataOptions rec_data;
    Common rec_common;
    std::vector<std::string> rec_inputs;
    RecommendConfig rec_config;
    rec->add_option("--model", model_path, "Model file")->required();
    rec_data.attach(rec, "--data-format");
    rec_common.attach(rec, false);
    rec->add_option("--input", rec_inputs, "Input track ids (comma-separated, repeatable)")->required();
    rec->add_option("--top-n", rec_config.top_n_artists, "Similar artists to keep")->check(CLI::PositiveNumber)->capture_default_str();
    rec->add_option("--max-songs", rec_config.max_songs, "Maximum recommendations")->check(CLI::PositiveNumber)->capture_default_str();
    rec->add_flag("--exclude-input-artists", rec_config.exclude_input_artists, "Skip songs by the input artists");
    rec->add_option("--format", rec_format, "table or json")->check(CLI::IsMember({"table", "json"}))->capture_default_str();

    // export
    auto* exp = app.add_subcommand("export", "Re-serialize a dataset as JSONL or CSV");
    DataOptions exp_data;
    Common exp_common;
    std::string exp_out, exp_to = "auto";
    bool exp_summarize = false;
    exp_data.attach(exp);
    exp_common.attach(exp, false);
    exp->add_option("--out", exp_out, "Output path")->required();
    exp->add_option("--to", exp_to, "Output format")->check(CLI::IsMember({"auto", "jsonl", "csv"}))->capture_default_str();
    exp->add_flag("--summarize", exp_summarize, "Replace segment sequences by their summaries");

    std::vector<const char*> argv{"msdrec"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kExitUsage;
    }

    try {
        if (gen->parsed()) {
            if (gen_artists) {
                gen_config.n_artists = *gen_artists;
            } else {
                gen_config.n_artists = std::max(gen_config.n_clusters_true, gen_config.n_tracks / 10);
                gen_config.n_artists = std::min(gen_config.n_artists, gen_config.n_tracks);
            }
            cmd_gen(gen_config, gen_out, out);
        } else if (analyze->parsed()) {
            cmd_analyze(analyze_data, analyze_common, analyze_out, out);
        } else if (select->parsed()) {
            cmd_select(select_data, select_opts, select_common, select_out, out);
        } else if (train->parsed()) {
            cmd_train(train_data, train_sel, train_fit, train_common, model_out, trace_out, created_at, out);
        } else if (sweep->parsed()) {
            cmd_sweep(sweep_data, sweep_sel, sweep_fit, sweep_common, sweep_k_spec, sweep_sample, sweep_csv,
                      tradeoff_out, tradeoff_queries, out);
        } else if (search->parsed()) {
            SearchPlan plan;
            if (!plan_path.empty()) {
                std::ifstream in(plan_path);
                if (!in) throw Error(ErrorKind::IoError, "cannot open '" + plan_path + "' for reading");
                std::stringstream buffer;
                buffer << in.rdbuf();
                plan = parse_plan_json(buffer.str());
            } else if (!stage_specs.empty()) {
                for (const auto& s : stage_specs) plan.stages.push_back(parse_stage(s));
            } else {
                plan = default_search_plan(k_min, k_max, random_budget);
            }
            plan.seed = search_common.seed;
            cmd_search(search_data, search_sel, search_fit, search_common, plan, search_sample, search_out_dir, out);
        } else if (rec->parsed()) {
            cmd_recommend(model_path, rec_data, rec_common, rec_inputs, rec_config, rec_format, out);
        } else if (exp->parsed()) {
            cmd_export(exp_data, exp_common, exp_out, exp_to, exp_summarize);
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return e.is_config_error() ? kExitUsage : kExitFailure;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitOk;
}

}  // namespace msdrec::cli
