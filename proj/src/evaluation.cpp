#include "msdrec/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>
#include <set>

#include "msdrec/error.hpp"
#include "msdrec/parallel.hpp"
#include "msdrec/random.hpp"
#include "msdrec/serialize.hpp"

namespace msdrec {

double silhouette_score(const FeatureMatrix& matrix, std::span<const std::size_t> assignments,
                        std::optional<std::size_t> sample_size, std::uint64_t seed, unsigned workers) {
    const std::size_t n = matrix.size();
    if (assignments.size() != n) {
        throw Error(ErrorKind::InvalidArgument, "assignment count does not match the matrix rows");
    }
    if (n < 2) throw Error(ErrorKind::TooFewPoints, "silhouette needs at least two points");
    if (sample_size && *sample_size == 0) throw Error(ErrorKind::InvalidArgument, "sample_size must be positive");

    const std::size_t clusters = *std::max_element(assignments.begin(), assignments.end()) + 1;
    std::vector<std::size_t> sizes(clusters, 0);
    for (auto c : assignments) ++sizes[c];
    const auto occupied = std::count_if(sizes.begin(), sizes.end(), [](std::size_t s) { return s > 0; });
    if (occupied < 2) throw Error(ErrorKind::SingleCluster, "silhouette needs at least two non-empty clusters");

    std::vector<std::size_t> evaluated;
    if (sample_size && *sample_size < n) {
        Rng rng(seed);
        evaluated = rng.sample_without_replacement(n, *sample_size);
    } else {
        evaluated.resize(n);
        for (std::size_t i = 0; i < n; ++i) evaluated[i] = i;
    }

    std::vector<double> scores(evaluated.size());
    const Matrix& x = matrix.rows;
    parallel::for_each_chunk(
        evaluated.size(), workers,
        [&](std::size_t, std::size_t begin, std::size_t end) {
            std::vector<double> sums(clusters);
            for (std::size_t e = begin; e < end; ++e) {
                const std::size_t i = evaluated[e];
                const std::size_t own = assignments[i];
                if (sizes[own] == 1) {
                    scores[e] = 0.0;
                    continue;
                }
                std::fill(sums.begin(), sums.end(), 0.0);
                const auto xi = x.row(i);
                for (std::size_t j = 0; j < n; ++j) {
                    if (j == i) continue;
                    sums[assignments[j]] += std::sqrt(squared_distance(xi, x.row(j)));
                }
                const double a = sums[own] / static_cast<double>(sizes[own] - 1);
                double b = std::numeric_limits<double>::infinity();
                for (std::size_t c = 0; c < clusters; ++c) {
                    if (c == own || sizes[c] == 0) continue;
                    b = std::min(b, sums[c] / static_cast<double>(sizes[c]));
                }
                const double denom = std::max(a, b);
                scores[e] = denom > 0.0 ? (b - a) / denom : 0.0;
            }
        },
        16);

    double total = 0.0;
    for (double s : scores) total += s;
    return total / static_cast<double>(scores.size());
}

std::uint64_t sweep_seed(std::uint64_t base_seed, std::size_t k) noexcept { return derive_seed(base_seed, {k}); }

std::vector<EvalReport> sweep_k(const FeatureMatrix& matrix, std::span<const std::size_t> k_values,
                                const FitConfig& fit_base, std::optional<std::size_t> sample_size) {
    if (k_values.empty()) throw Error(ErrorKind::InvalidConfig, "sweep needs at least one k");
    for (auto k : k_values) {
        if (k < 2 || k > matrix.size()) {
            throw Error(ErrorKind::InvalidConfig, "k=" + std::to_string(k) + " must lie in [2, " +
                                                      std::to_string(matrix.size()) + "]");
        }
    }

    std::vector<EvalReport> reports;
    reports.reserve(k_values.size());
    for (auto k : k_values) {
        const auto started = std::chrono::steady_clock::now();
        FitConfig config = fit_base;
        config.k = k;
        config.seed = sweep_seed(fit_base.seed, k);
        try {
            const KMeansModel model = kmeans_fit(matrix, config);
            const auto labels = kmeans_predict(model, matrix, config.workers);
            EvalReport report;
            report.k = k;
            report.inertia = model.inertia;
            report.seed = config.seed;
            report.silhouette = silhouette_score(matrix, labels, sample_size, config.seed, config.workers);
            report.sample_size = sample_size ? std::min(*sample_size, matrix.size()) : matrix.size();
            report.wall_time_ms = static_cast<std::uint64_t>(
                std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started)
                    .count());
            reports.push_back(report);
        } catch (const Error& e) {
            throw Error(e.kind(), "k=" + std::to_string(k) + ": " + e.what());
        }
    }
    return reports;
}

void write_sweep_csv(std::ostream& out, std::span<const EvalReport> reports) {
    out << "k,silhouette,inertia,sample_size,wall_time_ms,seed\n";
    for (const auto& r : reports) {
        out << r.k << ',' << canonical_dump(Json(r.silhouette)) << ',' << canonical_dump(Json(r.inertia)) << ','
            << r.sample_size << ',' << r.wall_time_ms << ',' << r.seed << '\n';
    }
}

SearchPlan default_search_plan(std::size_t k_min, std::size_t k_max, std::size_t random_budget, std::uint64_t seed) {
    SearchPlan plan;
    plan.seed = seed;
    SearchStage first;
    first.fraction = 0.10;
    first.strategy = SearchStrategy::Grid;
    for (std::size_t k = k_min; k <= k_max; ++k) first.k_candidates.push_back(k);
    SearchStage second;
    second.fraction = 0.25;
    second.strategy = SearchStrategy::Grid;
    SearchStage last;
    last.fraction = 1.0;
    last.strategy = SearchStrategy::Random;
    last.budget = random_budget;
    plan.stages = {first, second, last};
    return plan;
}

void validate_plan(const SearchPlan& plan) {
    auto bad = [](const std::string& what) { throw Error(ErrorKind::PlanError, what); };
    if (plan.stages.empty()) bad("plan has no stages");
    double previous = 0.0;
    for (std::size_t t = 0; t < plan.stages.size(); ++t) {
        const auto& s = plan.stages[t];
        const std::string where = "stage " + std::to_string(t) + ": ";
        if (!(s.fraction > 0.0 && s.fraction <= 1.0)) bad(where + "fraction must lie in (0, 1]");
        if (t > 0 && !(s.fraction > previous)) bad(where + "fractions must be strictly increasing");
        previous = s.fraction;
        for (auto k : s.k_candidates) {
            if (k < 2) bad(where + "every k must be >= 2");
        }
        if (s.k_range) {
            if (s.k_range->first < 2 || s.k_range->first > s.k_range->second) bad(where + "k_range must satisfy 2 <= lo <= hi");
        }
        if (s.strategy == SearchStrategy::Grid) {
            if (t == 0 && s.k_candidates.empty()) bad(where + "the first grid stage needs k candidates");
        } else {
            if (s.budget < 1) bad(where + "a random stage needs a budget >= 1");
            if (t == 0 && !s.k_range) bad(where + "the first random stage needs a k_range");
        }
    }
    if (plan.stages.back().fraction != 1.0) bad("the final stage must use the full dataset (fraction 1.0)");
}

namespace {

std::vector<std::size_t> stage_pool(const SearchStage& stage, std::size_t t, const std::vector<std::size_t>& narrowed) {
    std::set<std::size_t> own;
    if (stage.strategy == SearchStrategy::Grid) {
        own.insert(stage.k_candidates.begin(), stage.k_candidates.end());
    } else if (stage.k_range) {
        for (std::size_t k = stage.k_range->first; k <= stage.k_range->second; ++k) own.insert(k);
    }
    std::vector<std::size_t> pool;
    if (t == 0) {
        pool.assign(own.begin(), own.end());
    } else {
        for (auto k : narrowed) {
            if (own.empty() || own.contains(k)) pool.push_back(k);
        }
    }
    if (pool.empty()) {
        throw Error(ErrorKind::PlanError, "stage " + std::to_string(t) + " has no k candidates left");
    }
    return pool;
}

std::vector<std::size_t> ranked_by_silhouette(const std::vector<EvalReport>& reports) {
    std::vector<const EvalReport*> order;
    for (const auto& r : reports) order.push_back(&r);
    std::stable_sort(order.begin(), order.end(), [](const EvalReport* a, const EvalReport* b) {
        if (a->silhouette != b->silhouette) return a->silhouette > b->silhouette;
        return a->k < b->k;
    });
    std::vector<std::size_t> ks;
    for (auto* r : order) ks.push_back(r->k);
    return ks;
}

}  // namespace

SearchResult staged_search(std::span<const TrackRecord> records, const SearchPlan& plan,
                           const SelectionConfig& selection, const FitConfig& fit_base,
                           std::optional<std::size_t> sample_size) {
    validate_plan(plan);
    validate_fit_config(fit_base);
    const std::size_t total = records.size();

    SearchResult result;
    std::vector<std::size_t> narrowed;
    for (std::size_t t = 0; t < plan.stages.size(); ++t) {
        const auto& stage = plan.stages[t];
        const std::uint64_t stage_seed = stage.seed.value_or(derive_seed(plan.seed, {t}));

        const auto pool = stage_pool(stage, t, narrowed);
        std::vector<std::size_t> candidates = pool;
        if (stage.strategy == SearchStrategy::Random) {
            Rng rng(derive_seed(stage_seed, {1}));
            candidates.clear();
            for (auto idx : rng.sample_without_replacement(pool.size(), std::min(stage.budget, pool.size()))) {
                candidates.push_back(pool[idx]);
            }
        }

        const std::size_t rows =
            stage.fraction >= 1.0 ? total
                                  : static_cast<std::size_t>(std::ceil(stage.fraction * static_cast<double>(total)));
        const std::size_t k_max = *std::max_element(candidates.begin(), candidates.end());
        if (rows < k_max || rows < 2) {
            throw Error(ErrorKind::PlanError, "stage " + std::to_string(t) + " subset of " + std::to_string(rows) +
                                                  " rows is smaller than k=" + std::to_string(k_max));
        }

        std::vector<TrackRecord> subset;
        std::span<const TrackRecord> stage_records = records;
        if (rows < total) {
            Rng rng(derive_seed(stage_seed, {0}));
            for (auto i : rng.sample_without_replacement(total, rows)) subset.push_back(records[i]);
            stage_records = subset;
        }

        StageReport report;
        report.stage = t;
        report.fraction = stage.fraction;
        report.rows = rows;
        auto prepared = prepare_features(stage_records, selection, fit_base.workers);
        report.selection = std::move(prepared.report);

        FitConfig fit = fit_base;
        fit.seed = derive_seed(fit_base.seed, {t});
        report.reports = sweep_k(prepared.matrix, candidates, fit, sample_size);

        const auto ranked = ranked_by_silhouette(report.reports);
        narrowed.assign(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>((ranked.size() + 1) / 2));
        std::sort(narrowed.begin(), narrowed.end());
        result.best_k = ranked.front();
        result.stages.push_back(std::move(report));
    }
    return result;
}

}  // namespace msdrec
