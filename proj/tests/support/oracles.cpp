#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

namespace oracle {

namespace {

double dist(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) s += (a[j] - b[j]) * (a[j] - b[j]);
    return std::sqrt(s);
}

}  // namespace

double silhouette(const Points& points, const std::vector<std::size_t>& labels) {
    const std::size_t n = points.size();
    std::size_t k = 0;
    for (auto l : labels) k = std::max(k, l + 1);
    std::vector<std::size_t> sizes(k, 0);
    for (auto l : labels) ++sizes[l];
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (sizes[labels[i]] == 1) continue;
        std::vector<double> sums(k, 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) sums[labels[j]] += dist(points[i], points[j]);
        }
        const double a = sums[labels[i]] / static_cast<double>(sizes[labels[i]] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < k; ++c) {
            if (c != labels[i] && sizes[c] > 0) b = std::min(b, sums[c] / static_cast<double>(sizes[c]));
        }
        const double m = std::max(a, b);
        total += m > 0 ? (b - a) / m : 0.0;
    }
    return total / static_cast<double>(n);
}

double partition_inertia(const Points& points, const std::vector<std::size_t>& labels, std::size_t k) {
    const std::size_t d = points.empty() ? 0 : points[0].size();
    std::vector<std::vector<double>> centers(k, std::vector<double>(d, 0.0));
    std::vector<double> counts(k, 0.0);
    for (std::size_t i = 0; i < points.size(); ++i) {
        counts[labels[i]] += 1;
        for (std::size_t j = 0; j < d; ++j) centers[labels[i]][j] += points[i][j];
    }
    for (std::size_t c = 0; c < k; ++c) {
        for (auto& v : centers[c]) v = counts[c] > 0 ? v / counts[c] : 0.0;
    }
    double total = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const double dd = dist(points[i], centers[labels[i]]);
        total += dd * dd;
    }
    return total;
}

double optimal_inertia(const Points& points, std::size_t k) {
    const std::size_t n = points.size();
    std::vector<std::size_t> labels(n, 0);
    double best = std::numeric_limits<double>::infinity();
    for (;;) {
        std::vector<bool> used(k, false);
        for (auto l : labels) used[l] = true;
        if (std::all_of(used.begin(), used.end(), [](bool u) { return u; })) {
            best = std::min(best, partition_inertia(points, labels, k));
        }
        std::size_t pos = 0;
        while (pos < n && ++labels[pos] == k) labels[pos++] = 0;
        if (pos == n) break;
    }
    return best;
}

double aligned_accuracy(const std::vector<std::size_t>& truth, const std::vector<std::size_t>& predicted,
                        std::size_t k) {
    std::vector<std::size_t> perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    std::size_t best = 0;
    do {
        std::size_t hits = 0;
        for (std::size_t i = 0; i < truth.size(); ++i) {
            if (predicted[i] < k && perm[predicted[i]] == truth[i]) ++hits;
        }
        best = std::max(best, hits);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return truth.empty() ? 1.0 : static_cast<double>(best) / static_cast<double>(truth.size());
}

msdrec::FeatureMatrix make_matrix(const Points& points) {
    const std::size_t d = points.empty() ? 1 : points[0].size();
    std::vector<msdrec::ScaledFeature> feats;
    for (std::size_t j = 0; j < d; ++j) {
        char name[32];
        std::snprintf(name, sizeof(name), "f%03zu", j);
        feats.push_back({name, 0.0, 1.0});
    }
    msdrec::FeatureMatrix m;
    m.schema = std::make_shared<const msdrec::FeatureSchema>(msdrec::make_schema(feats));
    m.rows = msdrec::Matrix(points.size(), d);
    for (std::size_t i = 0; i < points.size(); ++i) {
        for (std::size_t j = 0; j < d; ++j) m.rows(i, j) = points[i][j];
        m.row_ids.push_back("r" + std::to_string(i));
    }
    return m;
}

std::filesystem::path scratch_dir(const std::string& name) {
    std::filesystem::path base;
    if (const char* env = std::getenv("MSDREC_TMP")) {
        base = env;
    } else {
        base = std::filesystem::temp_directory_path() / "msdrec_tests";
    }
    auto dir = base / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace oracle
