#pragma once

#include <span>
#include <vector>

#include "hedlm/features.hpp"

namespace hedlm::knn {

struct DistanceCandidate {
    features::FeatureVector features;  // carries user_id / row_index / label
    double distance = 0.0;

    Label label() const { return *features.label; }
};

/// sqrt(sum((a_i - b_i)^2)). Throws on length mismatch (the spans must both
/// cover the full 30 dimensions).
double euclidean(std::span<const double> a, std::span<const double> b);
double euclidean(const features::FeatureVector& a, const features::FeatureVector& b);

/// The min(distance_k, pool size) nearest pool entries, ascending by distance,
/// ties broken by ascending row_index. Requires a labeled, non-empty pool.
std::vector<DistanceCandidate> nearest_candidates(const features::FeatureVector& target,
                                                  std::span<const features::FeatureVector> pool,
                                                  int distance_k);

}  // namespace hedlm::knn
