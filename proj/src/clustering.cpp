#include "msdrec/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <mutex>

#include "msdrec/error.hpp"
#include "msdrec/parallel.hpp"
#include "msdrec/random.hpp"
#include "msdrec/serialize.hpp"

namespace msdrec {

namespace {

std::mutex g_observer_mutex;
std::shared_ptr<const std::function<void(const FitTrace&)>> g_observer;

void notify(const FitConfig& config, const FitTrace& trace) {
    if (config.on_trace) config.on_trace(trace);
    std::shared_ptr<const std::function<void(const FitTrace&)>> observer;
    {
        std::lock_guard lock(g_observer_mutex);
        observer = g_observer;
    }
    if (observer && *observer) (*observer)(trace);
}

/// Result of one assignment pass, reduced in ascending chunk order.
struct Assignment {
    std::vector<std::size_t> labels;
    std::vector<double> distances;  // squared distance to the assigned centroid
    std::vector<std::size_t> counts;
    Matrix sums;
    double inertia = 0.0;

    bool has_empty() const {
        return std::any_of(counts.begin(), counts.end(), [](std::size_t c) { return c == 0; });
    }
};

std::size_t nearest(std::span<const double> x, const Matrix& centroids, double& best_distance) {
    std::size_t best = 0;
    best_distance = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centroids.rows(); ++c) {
        const double d = squared_distance(x, centroids.row(c));
        if (d < best_distance) {
            best_distance = d;
            best = c;
        }
    }
    return best;
}

Assignment assign(const Matrix& data, const Matrix& centroids, unsigned workers) {
    const std::size_t n = data.rows();
    const std::size_t k = centroids.rows();
    const std::size_t d = data.cols();
    Assignment out;
    out.labels.resize(n);
    out.distances.resize(n);

    struct Partial {
        std::vector<std::size_t> counts;
        std::vector<double> sums;
        double inertia = 0.0;
    };
    std::vector<Partial> partials(parallel::chunk_count(n));
    parallel::for_each_chunk(n, workers, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
        Partial p{std::vector<std::size_t>(k, 0), std::vector<double>(k * d, 0.0), 0.0};
        for (std::size_t i = begin; i < end; ++i) {
            double dist = 0.0;
            const std::size_t c = nearest(data.row(i), centroids, dist);
            out.labels[i] = c;
            out.distances[i] = dist;
            ++p.counts[c];
            p.inertia += dist;
            auto x = data.row(i);
            double* sum = p.sums.data() + c * d;
            for (std::size_t j = 0; j < d; ++j) sum[j] += x[j];
        }
        partials[chunk] = std::move(p);
    });

    out.counts.assign(k, 0);
    out.sums = Matrix(k, d);
    for (const auto& p : partials) {
        out.inertia += p.inertia;
        for (std::size_t c = 0; c < k; ++c) {
            out.counts[c] += p.counts[c];
            auto sum = out.sums.row(c);
            for (std::size_t j = 0; j < d; ++j) sum[j] += p.sums[c * d + j];
        }
    }
    return out;
}

/// Moves every empty cluster's centroid onto the point farthest from its
/// own (updated) centroid; ties go to the lowest row index.
void repair_empty_clusters(const Matrix& data, const Assignment& state, Matrix& centroids) {
    const std::size_t n = data.rows();
    std::vector<double> reach(n);
    for (std::size_t i = 0; i < n; ++i) reach[i] = squared_distance(data.row(i), centroids.row(state.labels[i]));
    std::vector<std::size_t> remaining = state.counts;
    for (std::size_t c = 0; c < centroids.rows(); ++c) {
        if (state.counts[c] != 0) continue;
        std::size_t pick = n;
        for (std::size_t i = 0; i < n; ++i) {
            if (reach[i] < 0.0) continue;  // already donated
            if (remaining[state.labels[i]] <= 1) continue;
            if (pick == n || reach[i] > reach[pick]) pick = i;
        }
        if (pick == n) return;
        auto src = data.row(pick);
        std::copy(src.begin(), src.end(), centroids.row(c).begin());
        --remaining[state.labels[pick]];
        reach[pick] = -1.0;
    }
}

double norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

double max_relative_shift(const Matrix& before, const Matrix& after) {
    double worst = 0.0;
    for (std::size_t c = 0; c < before.rows(); ++c) {
        const double shift = std::sqrt(squared_distance(before.row(c), after.row(c))) / (norm(before.row(c)) + 1e-12);
        worst = std::max(worst, shift);
    }
    return worst;
}

double chunked_sum(const std::vector<double>& values, unsigned workers) {
    std::vector<double> partial(parallel::chunk_count(values.size()), 0.0);
    parallel::for_each_chunk(values.size(), workers, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
        double s = 0.0;
        for (std::size_t i = begin; i < end; ++i) s += values[i];
        partial[chunk] = s;
    });
    double total = 0.0;
    for (double s : partial) total += s;
    return total;
}

Matrix kmeans_plus_plus(const Matrix& data, std::size_t k, Rng& rng, unsigned workers) {
    const std::size_t n = data.rows();
    const std::size_t d = data.cols();
    Matrix centroids(k, d);
    std::size_t chosen = rng.uniform_index(n);
    std::vector<double> d2(n);

    auto place = [&](std::size_t c, std::size_t row) {
        auto src = data.row(row);
        std::copy(src.begin(), src.end(), centroids.row(c).begin());
    };
    place(0, chosen);
    parallel::for_each_chunk(n, workers, [&](std::size_t, std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) d2[i] = squared_distance(data.row(i), centroids.row(0));
    });

    for (std::size_t c = 1; c < k; ++c) {
        const double total = chunked_sum(d2, workers);
        if (!(total > 0.0)) {
            throw Error(ErrorKind::TooFewPoints, "data has fewer than k=" + std::to_string(k) + " distinct points");
        }
        const double target = rng.uniform() * total;
        double cumulative = 0.0;
        std::size_t last_positive = n;
        chosen = n;
        for (std::size_t i = 0; i < n; ++i) {
            if (d2[i] <= 0.0) continue;
            last_positive = i;
            cumulative += d2[i];
            if (cumulative > target) {
                chosen = i;
                break;
            }
        }
        if (chosen == n) chosen = last_positive;
        place(c, chosen);
        parallel::for_each_chunk(n, workers, [&](std::size_t, std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i) {
                d2[i] = std::min(d2[i], squared_distance(data.row(i), centroids.row(c)));
            }
        });
    }
    return centroids;
}

struct RestartResult {
    Matrix centroids;
    double inertia = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
    FitTrace trace;
};

/// Repairs orphaned centroids left after the iteration budget ran out.
void finalize(const Matrix& data, Matrix& centroids, Assignment& state, unsigned workers) {
    for (std::size_t attempt = 0; attempt < centroids.rows() && state.has_empty(); ++attempt) {
        repair_empty_clusters(data, state, centroids);
        state = assign(data, centroids, workers);
    }
}

RestartResult run_lloyd(const Matrix& data, const FitConfig& config, Rng& rng) {
    RestartResult result;
    result.trace.variant = FitVariant::Lloyd;
    Matrix centroids = kmeans_plus_plus(data, config.k, rng, config.workers);
    Assignment state = assign(data, centroids, config.workers);

    for (std::size_t iter = 1; iter <= config.max_iterations; ++iter) {
        Matrix updated = centroids;
        for (std::size_t c = 0; c < config.k; ++c) {
            if (state.counts[c] == 0) continue;
            const double inv = 1.0 / static_cast<double>(state.counts[c]);
            auto sum = state.sums.row(c);
            auto dst = updated.row(c);
            for (std::size_t j = 0; j < dst.size(); ++j) dst[j] = sum[j] * inv;
        }
        if (state.has_empty()) repair_empty_clusters(data, state, updated);

        const double shift = max_relative_shift(centroids, updated);
        result.trace.iterations.push_back({iter, state.inertia, shift});
        centroids = std::move(updated);
        state = assign(data, centroids, config.workers);
        result.iterations = iter;
        if (shift < config.tolerance && !state.has_empty()) {
            result.converged = true;
            break;
        }
    }
    finalize(data, centroids, state, config.workers);
    result.centroids = std::move(centroids);
    result.inertia = state.inertia;
    result.trace.final_inertia = state.inertia;
    return result;
}

/// Sculley's mini-batch update with per-centroid learning rate 1/count.
/// Trace inertia is the batch inertia scaled to the dataset size.
RestartResult run_minibatch(const Matrix& data, const FitConfig& config, Rng& rng) {
    RestartResult result;
    result.trace.variant = FitVariant::MiniBatch;
    const std::size_t n = data.rows();
    const std::size_t d = data.cols();
    const std::size_t batch = std::min(config.batch_size, n);
    Matrix centroids = kmeans_plus_plus(data, config.k, rng, config.workers);
    std::vector<std::size_t> seen(config.k, 0);
    std::vector<std::size_t> picks(batch);
    std::vector<std::size_t> owner(batch);
    std::vector<double> owner_dist(batch);

    for (std::size_t iter = 1; iter <= config.max_iterations; ++iter) {
        for (auto& p : picks) p = rng.uniform_index(n);
        parallel::for_each_chunk(batch, config.workers, [&](std::size_t, std::size_t begin, std::size_t end) {
            for (std::size_t b = begin; b < end; ++b) owner[b] = nearest(data.row(picks[b]), centroids, owner_dist[b]);
        });
        double batch_inertia = 0.0;
        for (double v : owner_dist) batch_inertia += v;

        const Matrix before = centroids;
        for (std::size_t b = 0; b < batch; ++b) {
            const std::size_t c = owner[b];
            const double eta = 1.0 / static_cast<double>(++seen[c]);
            auto mu = centroids.row(c);
            auto x = data.row(picks[b]);
            for (std::size_t j = 0; j < d; ++j) mu[j] = (1.0 - eta) * mu[j] + eta * x[j];
        }
        const double shift = max_relative_shift(before, centroids);
        result.trace.iterations.push_back(
            {iter, batch_inertia * static_cast<double>(n) / static_cast<double>(batch), shift});
        result.iterations = iter;
        if (shift < config.tolerance) {
            result.converged = true;
            break;
        }
    }
    Assignment state = assign(data, centroids, config.workers);
    finalize(data, centroids, state, config.workers);
    result.centroids = std::move(centroids);
    result.inertia = state.inertia;
    result.trace.final_inertia = state.inertia;
    return result;
}

}  // namespace

void validate_fit_config(const FitConfig& config) {
    auto bad = [](const std::string& what) { throw Error(ErrorKind::InvalidConfig, what); };
    if (config.k < 1) bad("k must be >= 1");
    if (config.max_iterations < 1) bad("max_iterations must be >= 1");
    if (!(config.tolerance >= 0.0) || !std::isfinite(config.tolerance)) bad("tolerance must be finite and >= 0");
    if (config.n_init < 1) bad("n_init must be >= 1");
    if (config.batch_size < 1) bad("batch_size must be >= 1");
}

KMeansModel kmeans_fit(const FeatureMatrix& matrix, const FitConfig& config, FitTrace& winning_trace) {
    validate_fit_config(config);
    if (!matrix.schema) throw Error(ErrorKind::InvalidArgument, "feature matrix has no schema");
    if (matrix.size() < config.k) {
        throw Error(ErrorKind::TooFewPoints, "n=" + std::to_string(matrix.size()) + " rows is fewer than k=" +
                                                 std::to_string(config.k));
    }

    std::optional<RestartResult> best;
    for (std::size_t r = 0; r < config.n_init; ++r) {
        Rng rng(derive_seed(config.seed, {r}));
        RestartResult result = config.variant == FitVariant::Lloyd ? run_lloyd(matrix.rows, config, rng)
                                                                   : run_minibatch(matrix.rows, config, rng);
        result.trace.restart = r;
        notify(config, result.trace);
        if (!best || result.inertia < best->inertia) best = std::move(result);
    }

    KMeansModel model;
    model.k = config.k;
    model.centroids = std::move(best->centroids);
    model.schema = matrix.schema;
    model.inertia = best->inertia;
    model.iterations_run = best->iterations;
    model.seed = config.seed;
    model.converged = best->converged;
    winning_trace = std::move(best->trace);
    return model;
}

KMeansModel kmeans_fit(const FeatureMatrix& matrix, const FitConfig& config) {
    FitTrace ignored;
    return kmeans_fit(matrix, config, ignored);
}

std::vector<std::size_t> kmeans_predict(const KMeansModel& model, const FeatureMatrix& rows, unsigned workers) {
    if (!same_schema(model.schema, rows.schema) || model.centroids.cols() != rows.dimension()) {
        throw Error(ErrorKind::SchemaMismatch, "feature matrix schema does not match the model");
    }
    std::vector<std::size_t> labels(rows.size());
    parallel::for_each_chunk(rows.size(), workers, [&](std::size_t, std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            double dist = 0.0;
            labels[i] = nearest(rows.rows.row(i), model.centroids, dist);
        }
    });
    return labels;
}

ClusterIndex build_index(const KMeansModel& model, const FeatureMatrix& matrix, unsigned workers) {
    const auto labels = kmeans_predict(model, matrix, workers);
    ClusterIndex index;
    index.model_id = model_id(model);
    index.members.resize(model.k);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        index.members[labels[i]].push_back(matrix.row_ids[i]);
        if (!index.assignments.emplace(matrix.row_ids[i], labels[i]).second) {
            throw Error(ErrorKind::DuplicateTrackId, matrix.row_ids[i]);
        }
    }
    return index;
}

ScopedTraceObserver::ScopedTraceObserver(std::function<void(const FitTrace&)> observer) {
    std::lock_guard lock(g_observer_mutex);
    g_observer = std::make_shared<const std::function<void(const FitTrace&)>>(std::move(observer));
}

ScopedTraceObserver::~ScopedTraceObserver() {
    std::lock_guard lock(g_observer_mutex);
    g_observer.reset();
}

}  // namespace msdrec
