#include "hedlm/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

namespace hedlm::dsp {

namespace {

// poly(roots): coefficients of prod (x - r_i), highest power first.
std::vector<std::complex<double>> poly_from_roots(const std::vector<std::complex<double>>& roots) {
    std::vector<std::complex<double>> coeffs{1.0};
    for (const auto& r : roots) {
        std::vector<std::complex<double>> next(coeffs.size() + 1, 0.0);
        for (std::size_t i = 0; i < coeffs.size(); ++i) {
            next[i] += coeffs[i];
            next[i + 1] -= coeffs[i] * r;
        }
        coeffs = std::move(next);
    }
    return coeffs;
}

// Direct form II transposed single pass with initial state zi (length order).
std::vector<double> lfilter(const std::vector<double>& b, const std::vector<double>& a,
                            const std::vector<double>& x, const std::vector<double>& zi) {
    const std::size_t order = a.size() - 1;
    std::vector<double> z = zi;
    z.resize(order + 1, 0.0);  // z[order] stays 0 as a sentinel
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double yi = b[0] * x[i] + z[0];
        for (std::size_t j = 0; j < order; ++j) {
            z[j] = b[j + 1] * x[i] + z[j + 1] - a[j + 1] * yi;
        }
        y[i] = yi;
    }
    return y;
}

// Steady-state initial conditions of the direct form II transposed filter for
// a unit step, i.e. the state that makes a constant input produce a constant
// output from the first sample.
std::vector<double> steady_state_zi(const std::vector<double>& b, const std::vector<double>& a) {
    const std::size_t n = a.size() - 1;
    // Solve (I - A^T) zi = b[1:] - a[1:] * b[0], where A is the companion
    // matrix of a.
    std::vector<std::vector<double>> m(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) m[i][i] = 1.0;
    for (std::size_t j = 0; j < n; ++j) m[j][0] += a[j + 1];
    for (std::size_t i = 0; i + 1 < n; ++i) m[i][i + 1] -= 1.0;

    std::vector<double> rhs(n);
    for (std::size_t i = 0; i < n; ++i) rhs[i] = b[i + 1] - a[i + 1] * b[0];

    // Gaussian elimination with partial pivoting; n is tiny (filter order).
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r) {
            if (std::abs(m[r][col]) > std::abs(m[pivot][col])) pivot = r;
        }
        std::swap(m[col], m[pivot]);
        std::swap(rhs[col], rhs[pivot]);
        if (m[col][col] == 0.0) throw Error("dsp", "singular system while computing filter state");
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = m[r][col] / m[col][col];
            for (std::size_t c = col; c < n; ++c) m[r][c] -= f * m[col][c];
            rhs[r] -= f * rhs[col];
        }
    }
    std::vector<double> zi(n);
    for (std::size_t i = n; i-- > 0;) {
        double s = rhs[i];
        for (std::size_t c = i + 1; c < n; ++c) s -= m[i][c] * zi[c];
        zi[i] = s / m[i][i];
    }
    return zi;
}

}  // namespace

double magnitude(double ax, double ay, double az) {
    if (!std::isfinite(ax) || !std::isfinite(ay) || !std::isfinite(az)) {
        throw Error("dsp", "magnitude requires finite axis values");
    }
    return std::sqrt(ax * ax + ay * ay + az * az);
}

std::array<Segment, kSegmentsPerRecord> segment_signal(const std::vector<double>& samples) {
    if (samples.size() != kSamplesPerRecord) {
        throw Error("dsp", "expected " + std::to_string(kSamplesPerRecord) + " samples, got " +
                               std::to_string(samples.size()));
    }
    std::array<Segment, kSegmentsPerRecord> segments;
    const Phase phases[kSegmentsPerRecord] = {Phase::Start, Phase::Activity, Phase::Finish};
    for (std::size_t s = 0; s < kSegmentsPerRecord; ++s) {
        segments[s].phase = phases[s];
        std::copy_n(samples.begin() + s * kSegmentLength, kSegmentLength, segments[s].values.begin());
    }
    return segments;
}

FilterCoefficients design_butterworth(int order, double f_cutoff, double f_s) {
    if (order < 1) throw Error("dsp", "filter order must be >= 1");
    const double nyquist = f_s / 2.0;
    if (!(f_cutoff > 0.0) || f_cutoff >= nyquist) {
        throw Error("dsp", "cutoff must satisfy 0 < f_cutoff < f_s/2");
    }

    // Analog prototype poles on the left unit semicircle, scaled to the
    // pre-warped cutoff, then mapped with the bilinear transform.
    const double warped = 2.0 * f_s * std::tan(std::numbers::pi * f_cutoff / f_s);
    std::vector<std::complex<double>> poles(order);
    for (int k = 1; k <= order; ++k) {
        const double theta = std::numbers::pi * (2.0 * k + order - 1.0) / (2.0 * order);
        poles[k - 1] = warped * std::complex<double>(std::cos(theta), std::sin(theta));
    }
    const double fs2 = 2.0 * f_s;
    std::vector<std::complex<double>> zpoles(order), zzeros(order, -1.0);
    for (int i = 0; i < order; ++i) zpoles[i] = (fs2 + poles[i]) / (fs2 - poles[i]);

    const auto bpoly = poly_from_roots(zzeros);
    const auto apoly = poly_from_roots(zpoles);

    FilterCoefficients c;
    c.order = order;
    c.f_cutoff = f_cutoff;
    c.f_s = f_s;
    c.f_nyquist = nyquist;
    c.f_normalized = f_cutoff / nyquist;
    c.a.resize(apoly.size());
    c.b.resize(bpoly.size());
    for (std::size_t i = 0; i < apoly.size(); ++i) c.a[i] = apoly[i].real();
    // Scale the numerator for exactly unity DC gain: sum(b) == sum(a).
    double asum = 0.0, bsum = 0.0;
    for (double v : c.a) asum += v;
    for (const auto& v : bpoly) bsum += v.real();
    const double gain = asum / bsum;
    for (std::size_t i = 0; i < bpoly.size(); ++i) c.b[i] = bpoly[i].real() * gain;
    return c;
}

double frequency_response_magnitude(const FilterCoefficients& coeffs, double f_hz) {
    const double w = 2.0 * std::numbers::pi * f_hz / coeffs.f_s;
    std::complex<double> num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < coeffs.b.size(); ++i) {
        num += coeffs.b[i] * std::exp(std::complex<double>(0.0, -w * static_cast<double>(i)));
    }
    for (std::size_t i = 0; i < coeffs.a.size(); ++i) {
        den += coeffs.a[i] * std::exp(std::complex<double>(0.0, -w * static_cast<double>(i)));
    }
    return std::abs(num / den);
}

std::vector<double> filtfilt(const FilterCoefficients& coeffs, const std::vector<double>& x) {
    const std::size_t ntaps = std::max(coeffs.a.size(), coeffs.b.size());
    const std::size_t padlen = 3 * (ntaps - 1);
    if (x.size() <= padlen) {
        throw Error("dsp", "filtfilt input of length " + std::to_string(x.size()) +
                               " is too short for the edge padding (" + std::to_string(padlen) + ")");
    }
    const std::size_t n = x.size();

    // Odd-symmetric extension at both ends, then trim after both passes.
    std::vector<double> ext;
    ext.reserve(n + 2 * padlen);
    for (std::size_t i = padlen; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
    ext.insert(ext.end(), x.begin(), x.end());
    for (std::size_t i = 1; i <= padlen; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

    const auto zi = steady_state_zi(coeffs.b, coeffs.a);
    auto scaled = [&](double x0) {
        std::vector<double> z(zi);
        for (double& v : z) v *= x0;
        return z;
    };

    std::vector<double> y = lfilter(coeffs.b, coeffs.a, ext, scaled(ext.front()));
    std::reverse(y.begin(), y.end());
    y = lfilter(coeffs.b, coeffs.a, y, scaled(y.front()));
    std::reverse(y.begin(), y.end());

    return std::vector<double>(y.begin() + padlen, y.begin() + padlen + n);
}

Segment minmax_normalize(const Segment& seg) {
    Segment out;
    out.phase = seg.phase;
    const auto [mn_it, mx_it] = std::minmax_element(seg.values.begin(), seg.values.end());
    const double mn = *mn_it, mx = *mx_it;
    if (mx > mn) {
        const double span = mx - mn;
        for (std::size_t i = 0; i < seg.values.size(); ++i) out.values[i] = (seg.values[i] - mn) / span;
    }
    // else: constant segment maps to all zeros
    return out;
}

}  // namespace hedlm::dsp
