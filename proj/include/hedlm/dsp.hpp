#pragma once

#include <array>
#include <vector>

#include "hedlm/types.hpp"

namespace hedlm::dsp {

enum class Phase { Start, Activity, Finish };

struct Segment {
    std::array<double, kSegmentLength> values{};
    Phase phase = Phase::Start;
};

/// Digital low-pass coefficients, numerator b over denominator a with a[0] = 1.
/// Designed so that sum(b)/sum(a) = 1 exactly (unity DC gain) and all poles lie
/// strictly inside the unit circle.
struct FilterCoefficients {
    std::vector<double> b;
    std::vector<double> a;
    int order = 0;
    double f_cutoff = 0.0;
    double f_s = 0.0;
    double f_nyquist = 0.0;     // f_s / 2
    double f_normalized = 0.0;  // f_cutoff / f_nyquist, in (0,1)
};

/// sqrt(ax^2 + ay^2 + az^2). Throws on non-finite input.
double magnitude(double ax, double ay, double az);

/// Splits 180 samples into [0,60), [60,120), [120,180) tagged Start/Activity/Finish.
std::array<Segment, kSegmentsPerRecord> segment_signal(const std::vector<double>& samples);

/// Butterworth low-pass via bilinear transform with frequency pre-warping.
/// Requires order >= 1 and 0 < f_cutoff < f_s/2.
FilterCoefficients design_butterworth(int order, double f_cutoff, double f_s);

/// |H(e^{j 2 pi f / f_s})| evaluated directly from the coefficients.
double frequency_response_magnitude(const FilterCoefficients& coeffs, double f_hz);

/// Zero-phase forward-backward filtering. The signal is extended at both ends
/// with an odd-symmetric reflection of length 3 * order and each pass starts
/// from steady-state initial conditions, so constants pass through exactly.
/// Requires x.size() > 3 * order.
std::vector<double> filtfilt(const FilterCoefficients& coeffs, const std::vector<double>& x);

/// (v - min) / (max - min) elementwise; a constant segment maps to all zeros.
Segment minmax_normalize(const Segment& seg);

}  // namespace hedlm::dsp
