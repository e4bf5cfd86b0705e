#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hedlm/config.hpp"
#include "hedlm/dsp.hpp"
#include "hedlm/types.hpp"

namespace hedlm::features {

/// Per-segment feature ids, in vector order.
enum class FeatureId : int {
    Mean = 0,
    Std = 1,
    Max = 2,
    Min = 3,
    PeakToPeak = 4,
    Rms = 5,
    Skewness = 6,
    Kurtosis = 7,          // excess convention
    DominantFrequency = 8,
    EnergyLowBand = 9,
};

/// Canonical lowercase key for config files and reports ("mean", "std", ...).
std::string feature_key(FeatureId id);
FeatureId feature_id_from_key(const std::string& key);

/// Prompt-facing display name ("Mean", "Peak-to-Peak", "Energy in Low Band", ...).
std::string feature_display_name(FeatureId id);

struct SegmentFeatures {
    double mean = 0.0;
    double std = 0.0;  // population convention
    double max = 0.0;
    double min = 0.0;
    double peak_to_peak = 0.0;
    double rms = 0.0;
    double skewness = 0.0;  // 0 when std == 0
    double kurtosis = 0.0;  // excess; 0 when std == 0
    double dominant_frequency = 0.0;
    double energy_low_band = 0.0;

    std::array<double, kFeaturesPerSegment> as_array() const;
};

struct FeatureVector {
    std::array<double, kFeatureCount> values{};
    std::string user_id;
    std::uint64_t row_index = 0;
    std::optional<Label> label;

    double at(int segment, FeatureId id) const;  // segment in 1..3
};

/// mean, population std, max, min, peak-to-peak, rms, skewness, excess kurtosis.
SegmentFeatures time_features(const dsp::Segment& seg);

/// One-sided DFT over the 60-sample segment: dominant non-DC bin frequency and
/// the summed squared magnitudes of all bins at or below low_band_hz (DC included).
/// Requires 0 < low_band_hz < f_s/2.
void spectral_features(const dsp::Segment& seg, double f_s, double low_band_hz,
                       SegmentFeatures& out);

/// segment -> filter -> normalize -> features, concatenated in segment order.
FeatureVector extract_feature_vector(const SignalRecord& record, const PipelineConfig& cfg);

/// Same computation with a caller-designed filter (used by the batch kernels so
/// the design is done once per run).
FeatureVector extract_feature_vector(const SignalRecord& record, const PipelineConfig& cfg,
                                     const dsp::FilterCoefficients& coeffs);

/// Column names in CSV order: seg1_mean ... seg3_energy_low.
std::vector<std::string> feature_column_names();

}  // namespace hedlm::features
