#pragma once

// Test-side reference implementations. They deliberately share no code with
// the library beyond the plain data types.

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "msdrec/types.hpp"

namespace oracle {

using Points = std::vector<std::vector<double>>;

/// O(n^2) silhouette straight from the definition; singletons score 0.
double silhouette(const Points& points, const std::vector<std::size_t>& labels);

/// Minimum inertia over every partition of `points` into exactly k non-empty
/// groups (k^n labelings, so only for tiny n).
double optimal_inertia(const Points& points, std::size_t k);

/// Inertia of a labeling using group means as centers.
double partition_inertia(const Points& points, const std::vector<std::size_t>& labels, std::size_t k);

/// Fraction of points whose predicted label maps to the true label under the
/// best bijection between label sets (brute force over permutations).
double aligned_accuracy(const std::vector<std::size_t>& truth, const std::vector<std::size_t>& predicted,
                        std::size_t k);

/// Identity-scaled feature matrix over `points` with ids r0, r1, ...
msdrec::FeatureMatrix make_matrix(const Points& points);

/// Fresh empty directory under the build tree (or /tmp).
std::filesystem::path scratch_dir(const std::string& name);

std::string read_file(const std::filesystem::path& path);

}  // namespace oracle
