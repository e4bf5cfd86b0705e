#pragma once

#include <cstdint>
#include <string>

namespace hedlm {

enum class ScorerKind { Live, Mock };

struct FilterSettings {
    int order = 4;
    double cutoff_hz = 30.0;
    double sample_rate_hz = 256.0;
    // Filtering is applied per 60-sample segment by default; set to false to
    // low-pass the whole 180-sample signal before windowing.
    bool per_segment = true;
};

struct PipelineConfig {
    int distance_k = 10;
    int top_k = 5;
    int n_shots = 2;
    ScorerKind scorer = ScorerKind::Mock;
    std::uint64_t seed = 0;

    FilterSettings filter;
    bool normalize = true;
    double low_band_hz = 5.0;
    // Optional per-dimension standardization over the support pool before
    // distance ranking. Off by default: distances are taken on raw features.
    bool zscore_features = false;

    std::string model = "gpt-4o-mini";
    double temperature = 0.3;
    std::string base_url = "https://api.openai.com/v1";
    std::string cache_dir;
    int request_timeout_s = 60;
    int max_retries = 3;
    // When true the domain-knowledge block is sent as a system message instead
    // of being folded into the single user message.
    bool dk_as_system_message = false;

    int jobs = 1;

    /// Throws hedlm::Error on invalid combinations (top_k > distance_k, ...).
    void validate() const;
};

}  // namespace hedlm
