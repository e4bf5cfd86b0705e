#pragma once

#include <span>
#include <vector>

#include "hedlm/config.hpp"
#include "hedlm/features.hpp"
#include "hedlm/types.hpp"

namespace hedlm::batch {

/// OpenMP-parallel feature extraction over a record set. jobs <= 0 uses all
/// available threads. Output order matches input order and is bit-identical
/// to the serial reference.
std::vector<features::FeatureVector> extract_features(std::span<const SignalRecord> records,
                                                      const PipelineConfig& cfg, int jobs);

/// Plain-loop reference implementation kept for testing and benchmarking.
std::vector<features::FeatureVector> extract_features_serial(std::span<const SignalRecord> records,
                                                             const PipelineConfig& cfg);

std::vector<double> distances_to_pool(const features::FeatureVector& target,
                                      std::span<const features::FeatureVector> pool, int jobs);

std::vector<double> distances_to_pool_serial(const features::FeatureVector& target,
                                             std::span<const features::FeatureVector> pool);

}  // namespace hedlm::batch
