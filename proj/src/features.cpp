#include "hedlm/features.hpp"

#include <cmath>
#include <numbers>

namespace hedlm::features {

namespace {

constexpr const char* kKeys[kFeaturesPerSegment] = {
    "mean", "std", "max", "min", "peak_to_peak",
    "rms",  "skewness", "kurtosis", "dominant_frequency", "energy_low_band"};

constexpr const char* kDisplayNames[kFeaturesPerSegment] = {
    "Mean", "Std", "Max", "Min", "Peak-to-Peak",
    "RMS",  "Skew", "Kurtosis", "Dominant Frequency", "Energy in Low Band"};

constexpr const char* kColumnSuffix[kFeaturesPerSegment] = {
    "mean", "std", "max", "min", "ptp", "rms", "skew", "kurt", "domfreq", "energy_low"};

}  // namespace

std::string feature_key(FeatureId id) { return kKeys[static_cast<int>(id)]; }

FeatureId feature_id_from_key(const std::string& key) {
    for (int i = 0; i < static_cast<int>(kFeaturesPerSegment); ++i) {
        if (key == kKeys[i]) return static_cast<FeatureId>(i);
    }
    throw Error("features", "unknown feature key '" + key + "'");
}

std::string feature_display_name(FeatureId id) { return kDisplayNames[static_cast<int>(id)]; }

std::array<double, kFeaturesPerSegment> SegmentFeatures::as_array() const {
    return {mean, std, max, min, peak_to_peak, rms, skewness, kurtosis,
            dominant_frequency, energy_low_band};
}

double FeatureVector::at(int segment, FeatureId id) const {
    if (segment < 1 || segment > static_cast<int>(kSegmentsPerRecord)) {
        throw Error("features", "segment index out of range: " + std::to_string(segment));
    }
    return values[(segment - 1) * kFeaturesPerSegment + static_cast<int>(id)];
}

SegmentFeatures time_features(const dsp::Segment& seg) {
    const auto& v = seg.values;
    const double n = static_cast<double>(v.size());

    SegmentFeatures f;
    double sum = 0.0, sumsq = 0.0;
    f.max = v[0];
    f.min = v[0];
    for (double x : v) {
        if (!std::isfinite(x)) throw Error("features", "non-finite sample in segment");
        sum += x;
        sumsq += x * x;
        f.max = std::max(f.max, x);
        f.min = std::min(f.min, x);
    }
    f.mean = sum / n;
    f.peak_to_peak = f.max - f.min;
    f.rms = std::sqrt(sumsq / n);

    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double x : v) {
        const double d = x - f.mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    f.std = std::sqrt(m2);
    if (f.std > 0.0) {
        f.skewness = m3 / (f.std * f.std * f.std);
        f.kurtosis = m4 / (m2 * m2) - 3.0;  // excess
    }
    return f;
}

void spectral_features(const dsp::Segment& seg, double f_s, double low_band_hz,
                       SegmentFeatures& out) {
    if (!(low_band_hz > 0.0) || low_band_hz >= f_s / 2.0) {
        throw Error("features", "low band must satisfy 0 < low_band_hz < f_s/2");
    }
    constexpr std::size_t n = kSegmentLength;
    constexpr std::size_t half = n / 2;  // one-sided bins 0..30

    // Direct DFT; 60 points is small enough that an FFT buys nothing here.
    std::array<double, half + 1> mag{};
    for (std::size_t k = 0; k <= half; ++k) {
        double re = 0.0, im = 0.0;
        const double w = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
        for (std::size_t t = 0; t < n; ++t) {
            const double ang = w * static_cast<double>(t);
            re += seg.values[t] * std::cos(ang);
            im += seg.values[t] * std::sin(ang);
        }
        mag[k] = std::hypot(re, im);
    }

    const double bin_hz = f_s / static_cast<double>(n);
    double best = 0.0;
    std::size_t best_k = 0;
    for (std::size_t k = 1; k <= half; ++k) {
        if (mag[k] > best) {
            best = mag[k];
            best_k = k;
        }
    }
    // A numerically silent spectrum (e.g. constant input) has no dominant bin.
    const double floor = 1e-9 * std::max(1.0, mag[0]);
    out.dominant_frequency = (best <= floor) ? 0.0 : bin_hz * static_cast<double>(best_k);

    double energy = 0.0;
    for (std::size_t k = 0; k <= half; ++k) {
        if (bin_hz * static_cast<double>(k) <= low_band_hz) energy += mag[k] * mag[k];
    }
    out.energy_low_band = energy;
}

FeatureVector extract_feature_vector(const SignalRecord& record, const PipelineConfig& cfg) {
    const auto coeffs = dsp::design_butterworth(cfg.filter.order, cfg.filter.cutoff_hz,
                                                cfg.filter.sample_rate_hz);
    return extract_feature_vector(record, cfg, coeffs);
}

FeatureVector extract_feature_vector(const SignalRecord& record, const PipelineConfig& cfg,
                                     const dsp::FilterCoefficients& coeffs) {
    FeatureVector fv;
    fv.user_id = record.user_id;
    fv.row_index = record.row_index;
    fv.label = record.label;

    std::array<dsp::Segment, kSegmentsPerRecord> segments;
    if (cfg.filter.per_segment) {
        segments = dsp::segment_signal(record.samples);
        for (auto& seg : segments) {
            const std::vector<double> in(seg.values.begin(), seg.values.end());
            const auto filtered = dsp::filtfilt(coeffs, in);
            std::copy(filtered.begin(), filtered.end(), seg.values.begin());
        }
    } else {
        if (record.samples.size() != kSamplesPerRecord) {
            throw Error("features", "record row " + std::to_string(record.row_index) +
                                        " does not have " + std::to_string(kSamplesPerRecord) + " samples");
        }
        segments = dsp::segment_signal(dsp::filtfilt(coeffs, record.samples));
    }

    for (std::size_t s = 0; s < kSegmentsPerRecord; ++s) {
        const dsp::Segment seg = cfg.normalize ? dsp::minmax_normalize(segments[s]) : segments[s];
        SegmentFeatures f = time_features(seg);
        spectral_features(seg, cfg.filter.sample_rate_hz, cfg.low_band_hz, f);
        const auto arr = f.as_array();
        std::copy(arr.begin(), arr.end(), fv.values.begin() + s * kFeaturesPerSegment);
    }
    return fv;
}

std::vector<std::string> feature_column_names() {
    std::vector<std::string> names;
    names.reserve(kFeatureCount);
    for (std::size_t s = 1; s <= kSegmentsPerRecord; ++s) {
        for (std::size_t f = 0; f < kFeaturesPerSegment; ++f) {
            names.push_back("seg" + std::to_string(s) + "_" + kColumnSuffix[f]);
        }
    }
    return names;
}

}  // namespace hedlm::features
