#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "msdrec/clustering.hpp"
#include "msdrec/features.hpp"
#include "msdrec/types.hpp"

namespace msdrec {

/// Mean silhouette s(i) = (b − a) / max(a, b) over the evaluated points,
/// using Euclidean distance. Singleton members score 0. With
/// sample_size < n, a seeded uniform sample of points is evaluated but every
/// a(i), b(i) is measured against the full matrix.
double silhouette_score(const FeatureMatrix& matrix, std::span<const std::size_t> assignments,
                        std::optional<std::size_t> sample_size = std::nullopt, std::uint64_t seed = 0,
                        unsigned workers = 0);

struct EvalReport {
    std::size_t k = 0;
    double silhouette = 0.0;
    double inertia = 0.0;
    std::size_t sample_size = 0;
    std::uint64_t wall_time_ms = 0;
    std::uint64_t seed = 0;
};

/// Fit and silhouette seed used for a given k in a sweep.
std::uint64_t sweep_seed(std::uint64_t base_seed, std::size_t k) noexcept;

std::vector<EvalReport> sweep_k(const FeatureMatrix& matrix, std::span<const std::size_t> k_values,
                                const FitConfig& fit_base, std::optional<std::size_t> sample_size = std::nullopt);

/// Header `k,silhouette,inertia,sample_size,wall_time_ms,seed`.
void write_sweep_csv(std::ostream& out, std::span<const EvalReport> reports);

enum class SearchStrategy { Grid, Random };

struct SearchStage {
    double fraction = 1.0;
    SearchStrategy strategy = SearchStrategy::Grid;
    /// Grid candidates. Required on the first grid stage; on later stages it
    /// restricts the narrowed list handed down from the previous stage.
    std::vector<std::size_t> k_candidates;
    /// Inclusive range for random stages, with the same first/later rules.
    std::optional<std::pair<std::size_t, std::size_t>> k_range;
    /// Number of k values a random stage draws without replacement.
    std::size_t budget = 0;
    std::optional<std::uint64_t> seed;
};

struct SearchPlan {
    std::vector<SearchStage> stages;
    std::uint64_t seed = 0;
};

/// Three stages on 10%, 25% and 100% of the data: grid over [k_min, k_max],
/// grid over the survivors, then random search over those survivors.
SearchPlan default_search_plan(std::size_t k_min = 2, std::size_t k_max = 10, std::size_t random_budget = 3,
                               std::uint64_t seed = 0);

void validate_plan(const SearchPlan& plan);

struct StageReport {
    std::size_t stage = 0;
    double fraction = 0.0;
    std::size_t rows = 0;
    SelectionReport selection;
    std::vector<EvalReport> reports;
};

struct SearchResult {
    std::size_t best_k = 0;
    std::vector<StageReport> stages;
};

/// Each stage re-runs selection and scaling on its subsample, sweeps its
/// candidates, and passes the top ⌈half⌉ by silhouette to the next stage.
/// best_k maximizes the last stage's silhouette (ties go to the smaller k).
SearchResult staged_search(std::span<const TrackRecord> records, const SearchPlan& plan,
                           const SelectionConfig& selection, const FitConfig& fit_base,
                           std::optional<std::size_t> sample_size = std::nullopt);

}  // namespace msdrec
