#include "hedlm/knn.hpp"

#include <algorithm>
#include <cmath>

namespace hedlm::knn {

double euclidean(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw Error("knn", "vector length mismatch: " + std::to_string(a.size()) + " vs " +
                               std::to_string(b.size()));
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        sum += d * d;
    }
    return std::sqrt(sum);
}

double euclidean(const features::FeatureVector& a, const features::FeatureVector& b) {
    return euclidean(std::span<const double>(a.values), std::span<const double>(b.values));
}

std::vector<DistanceCandidate> nearest_candidates(const features::FeatureVector& target,
                                                  std::span<const features::FeatureVector> pool,
                                                  int distance_k) {
    if (pool.empty()) throw Error("knn", "candidate pool is empty");
    if (distance_k < 1) throw Error("knn", "distance_k must be >= 1");

    std::vector<DistanceCandidate> candidates;
    candidates.reserve(pool.size());
    for (const auto& fv : pool) {
        if (!fv.label) {
            throw Error("knn", "pool row " + std::to_string(fv.row_index) + " is unlabeled");
        }
        candidates.push_back({fv, euclidean(target, fv)});
    }
    std::sort(candidates.begin(), candidates.end(),
              [](const DistanceCandidate& x, const DistanceCandidate& y) {
                  if (x.distance != y.distance) return x.distance < y.distance;
                  return x.features.row_index < y.features.row_index;
              });
    const std::size_t keep = std::min<std::size_t>(candidates.size(), static_cast<std::size_t>(distance_k));
    candidates.resize(keep);
    return candidates;
}

}  // namespace hedlm::knn
