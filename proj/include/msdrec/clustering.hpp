#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "msdrec/types.hpp"

namespace msdrec {

enum class FitVariant { Lloyd, MiniBatch };

struct IterationRecord {
    std::size_t iteration = 0;
    /// Σ min_c ‖x − μ_c‖² under the centroids entering this iteration.
    double inertia = 0.0;
    /// max_c ‖μ_c' − μ_c‖ / (‖μ_c‖ + 1e-12) for the update made in this iteration.
    double max_shift = 0.0;
};

struct FitTrace {
    FitVariant variant = FitVariant::Lloyd;
    std::size_t restart = 0;
    std::vector<IterationRecord> iterations;
    /// Inertia under the returned centroids.
    double final_inertia = 0.0;
};

struct FitConfig {
    std::size_t k = 1;
    std::size_t max_iterations = 100;
    double tolerance = 1e-4;
    std::uint64_t seed = 0;
    std::size_t n_init = 4;
    FitVariant variant = FitVariant::Lloyd;
    std::size_t batch_size = 1024;
    /// Caps internal parallelism; never changes the result. 0 = all hardware threads.
    unsigned workers = 0;
    /// Called once per finished restart. May be invoked from several fits at once.
    std::function<void(const FitTrace&)> on_trace;
};

void validate_fit_config(const FitConfig& config);

/// Best-of-n_init K-means with k-means++ seeding. Restart r uses the stream
/// derive_seed(seed, {r}); ties in inertia go to the lowest restart index.
KMeansModel kmeans_fit(const FeatureMatrix& matrix, const FitConfig& config);

/// Same as kmeans_fit, also returning the winning restart's trace.
KMeansModel kmeans_fit(const FeatureMatrix& matrix, const FitConfig& config, FitTrace& winning_trace);

/// Nearest centroid per row; ties go to the lowest cluster index.
std::vector<std::size_t> kmeans_predict(const KMeansModel& model, const FeatureMatrix& rows, unsigned workers = 0);

ClusterIndex build_index(const KMeansModel& model, const FeatureMatrix& matrix, unsigned workers = 0);

/// Process-wide observer invoked after every restart of every fit, in
/// addition to FitConfig::on_trace. Used by audit tooling that must see fits
/// it did not configure (e.g. those launched through the CLI).
class ScopedTraceObserver {
public:
    explicit ScopedTraceObserver(std::function<void(const FitTrace&)> observer);
    ~ScopedTraceObserver();
    ScopedTraceObserver(const ScopedTraceObserver&) = delete;
    ScopedTraceObserver& operator=(const ScopedTraceObserver&) = delete;
};

}  // namespace msdrec
