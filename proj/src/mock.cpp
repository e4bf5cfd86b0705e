#include "hedlm/mock.hpp"

#include <cmath>

namespace hedlm::llm {

namespace {

// Representable range per feature kind, used to put the 30 dimensions on a
// comparable scale before differencing. Time-domain features of min-max
// normalized segments live in [0,1]; moments and spectral features get the
// span of their reachable values at 60 samples / 256 Hz.
constexpr double kDimScale[kFeaturesPerSegment] = {
    1.0,     // mean
    1.0,     // std
    1.0,     // max
    1.0,     // min
    1.0,     // peak-to-peak
    1.0,     // rms
    4.0,     // skewness
    8.0,     // kurtosis
    128.0,   // dominant frequency (Nyquist)
    3600.0,  // low-band energy (60^2 at full-scale DC)
};

double rescaled_mean_abs_diff(const features::FeatureVector& a, const features::FeatureVector& b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
        sum += std::abs(a.values[i] - b.values[i]) / kDimScale[i % kFeaturesPerSegment];
    }
    return sum / static_cast<double>(kFeatureCount);
}

double synergy(Label labeled, const features::FeatureVector& target,
               const prompt::DomainKnowledge& dk) {
    const auto rules = dk.rules_for(labeled);
    if (rules.empty()) return 0.0;
    std::size_t satisfied = 0;
    for (const auto& rule : rules) {
        if (prompt::rule_satisfied(rule, target)) ++satisfied;
    }
    return static_cast<double>(satisfied) / static_cast<double>(rules.size());
}

}  // namespace

RelevanceResult mock_score(const features::FeatureVector& labeled, Label label,
                           const features::FeatureVector& target,
                           const prompt::DomainKnowledge& dk) {
    const double sim = 1.0 / (1.0 + 10.0 * rescaled_mean_abs_diff(labeled, target));
    const double syn = synergy(label, target, dk);

    RelevanceResult result;
    result.score = 0.5 * sim + 0.5 * syn;
    result.reason = "Mock comparison: sim=" + std::to_string(sim) + ", synergy=" + std::to_string(syn);
    result.raw = "SCORE: " + std::to_string(result.score) + "\nREASON: " + result.reason;
    result.source = ResultSource::Mock;
    return result;
}

std::string mock_fewshot_reply(std::span<const MockShotView> shots,
                               const features::FeatureVector& target,
                               const prompt::DomainKnowledge& dk) {
    if (shots.empty()) throw Error("llm", "mock reply needs at least one shot");
    double best = -1.0;
    Label best_label = shots.front().label;
    for (const auto& shot : shots) {
        const double s = mock_score(*shot.features, shot.label, target, dk).score;
        if (s > best) {
            best = s;
            best_label = shot.label;
        }
    }
    return to_string(best_label);
}

}  // namespace hedlm::llm
