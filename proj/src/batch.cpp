#include "hedlm/batch.hpp"

#include <exception>

#include <omp.h>

#include "hedlm/knn.hpp"

namespace hedlm::batch {

std::vector<features::FeatureVector> extract_features(std::span<const SignalRecord> records,
                                                      const PipelineConfig& cfg, int jobs) {
    const auto coeffs =
        dsp::design_butterworth(cfg.filter.order, cfg.filter.cutoff_hz, cfg.filter.sample_rate_hz);
    std::vector<features::FeatureVector> out(records.size());
    const int threads = jobs <= 0 ? omp_get_max_threads() : jobs;
    std::exception_ptr error;

#pragma omp parallel for schedule(static) num_threads(threads)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(records.size()); ++i) {
        try {
            out[i] = features::extract_feature_vector(records[i], cfg, coeffs);
        } catch (...) {
#pragma omp critical
            if (!error) error = std::current_exception();
        }
    }
    if (error) std::rethrow_exception(error);
    return out;
}

std::vector<features::FeatureVector> extract_features_serial(std::span<const SignalRecord> records,
                                                             const PipelineConfig& cfg) {
    const auto coeffs =
        dsp::design_butterworth(cfg.filter.order, cfg.filter.cutoff_hz, cfg.filter.sample_rate_hz);
    std::vector<features::FeatureVector> out;
    out.reserve(records.size());
    for (const auto& record : records) {
        out.push_back(features::extract_feature_vector(record, cfg, coeffs));
    }
    return out;
}

std::vector<double> distances_to_pool(const features::FeatureVector& target,
                                      std::span<const features::FeatureVector> pool, int jobs) {
    std::vector<double> out(pool.size());
    const int threads = jobs <= 0 ? omp_get_max_threads() : jobs;

#pragma omp parallel for schedule(static) num_threads(threads)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(pool.size()); ++i) {
        out[i] = knn::euclidean(target, pool[i]);
    }
    return out;
}

std::vector<double> distances_to_pool_serial(const features::FeatureVector& target,
                                             std::span<const features::FeatureVector> pool) {
    std::vector<double> out;
    out.reserve(pool.size());
    for (const auto& fv : pool) out.push_back(knn::euclidean(target, fv));
    return out;
}

}  // namespace hedlm::batch
