#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "ecgra/baseline.hpp" // detail::mirror_index
#include "ecgra/error.hpp"
#include "ecgra/recording.hpp"

namespace ecgra {

// Orthonormal Daubechies-4 (8-tap) analysis low-pass. The high-pass is the
// alternating flip, computed below rather than transcribed. The filter
// identities (sum h = sqrt(2), sum h^2 = 1) are enforced by tests.
inline constexpr std::array<double, 8> kDb4Lo = {
    0.23037781330885523,  0.71484657055254153,  0.63088076792959036,
    -0.027983769416983849, -0.18703481171888114, 0.030841381835986965,
    0.032883011666982945, -0.010597401784997278};

inline constexpr std::array<double, 8> db4_highpass() {
    std::array<double, 8> g{};
    for (int i = 0; i < 8; ++i)
        g[i] = (i % 2 == 0 ? 1.0 : -1.0) * kDb4Lo[7 - i];
    return g;
}

inline constexpr std::array<double, 8> kDb4Hi = db4_highpass();

// Boundary handling for the multilevel transform.
//
// The filter bank itself is periodized (circular convolution, downsample by
// two). That is the only critically sampled scheme that is exactly
// invertible for an orthogonal non-symmetric filter like db4, and it yields
// ceil(m/2) coefficients per band. Odd lengths are first extended by one
// sample with a half-sample mirror (repeat the edge value).
//
//  - periodic:  the bare periodized bank. Critically sampled; orthonormal
//               (energy preserving) on even lengths.
//  - symmetric: before each split the signal is mirror-extended by 6 samples
//               per side, and the periodized bank runs on the extended
//               signal. The circular seam lands inside the mirror apron
//               instead of on the data edge, so edge discontinuities do not
//               leak large detail coefficients into the data region. Costs
//               6 extra coefficients per band per side; still exactly
//               invertible (the inverse crops the apron).
enum class WaveletBoundary { periodic, symmetric };

inline constexpr std::size_t kSymApron = 6; // filter length - 2

// Multilevel decomposition of one signal. details[l] holds level l+1
// (finest first); approximation is the deepest level.
struct WaveletCoeffs {
    std::vector<double> approximation;
    std::vector<std::vector<double>> details;
    std::size_t original_length = 0;
    WaveletBoundary mode = WaveletBoundary::symmetric;

    int levels() const { return static_cast<int>(details.size()); }

    double total_energy() const {
        double e = 0.0;
        for (double v : approximation) e += v * v;
        for (const auto& d : details)
            for (double v : d) e += v * v;
        return e;
    }
};

namespace detail {

struct WaveletLevel {
    std::size_t in_len;   // approximation length entering this level
    std::size_t band_len; // coefficients per band produced
    bool padded;          // one extra mirror sample appended for parity
};

inline std::vector<WaveletLevel> wavelet_plan(std::size_t n, int levels, WaveletBoundary mode) {
    std::vector<WaveletLevel> plan;
    std::size_t m = n;
    for (int l = 0; l < levels; ++l) {
        std::size_t ext = (mode == WaveletBoundary::symmetric) ? m + 2 * kSymApron : m;
        const bool padded = (ext % 2) != 0;
        ext += padded ? 1 : 0;
        plan.push_back({m, ext / 2, padded});
        m = ext / 2;
    }
    return plan;
}

// One analysis step of the periodized bank: even-length x -> two half bands.
inline void periodic_split(const std::vector<double>& x, std::vector<double>& approx,
                           std::vector<double>& det) {
    const std::size_t me = x.size();
    const std::size_t half = me / 2;
    approx.assign(half, 0.0);
    det.assign(half, 0.0);
    for (std::size_t k = 0; k < half; ++k) {
        double sa = 0.0, sd = 0.0;
        for (int i = 0; i < 8; ++i) {
            const double v = x[(2 * k + i) % me];
            sa += kDb4Lo[i] * v;
            sd += kDb4Hi[i] * v;
        }
        approx[k] = sa;
        det[k] = sd;
    }
}

// Transpose of periodic_split; exact inverse because the periodized bank is
// orthogonal on every even length.
inline std::vector<double> periodic_merge(const std::vector<double>& approx,
                                          const std::vector<double>& det) {
    const std::size_t half = approx.size();
    const std::size_t me = 2 * half;
    std::vector<double> y(me, 0.0);
    for (std::size_t k = 0; k < half; ++k) {
        const double a = approx[k];
        const double d = det[k];
        for (int i = 0; i < 8; ++i)
            y[(2 * k + i) % me] += kDb4Lo[i] * a + kDb4Hi[i] * d;
    }
    return y;
}

inline std::vector<double> extend_for_level(const std::vector<double>& x, WaveletBoundary mode,
                                            bool padded) {
    const long long n = static_cast<long long>(x.size());
    if (mode == WaveletBoundary::periodic) {
        std::vector<double> y = x;
        if (padded) y.push_back(y.back());
        return y;
    }
    const long long apron = static_cast<long long>(kSymApron);
    std::vector<double> y;
    y.reserve(x.size() + 2 * kSymApron + 1);
    for (long long i = -apron; i < n + apron; ++i)
        y.push_back(x[mirror_index(i, n)]);
    if (padded) y.push_back(y.back());
    return y;
}

} // namespace detail

inline WaveletCoeffs dwt_db4(const std::vector<double>& signal, int levels,
                             WaveletBoundary mode = WaveletBoundary::symmetric) {
    if (levels < 1)
        throw ConfigError("dwt_db4: levels must be at least 1");
    if (signal.size() < (static_cast<std::size_t>(1) << levels))
        throw NumericError("dwt_db4: signal of length " + std::to_string(signal.size()) +
                           " too short for " + std::to_string(levels) + " levels");

    const auto plan = detail::wavelet_plan(signal.size(), levels, mode);
    WaveletCoeffs out;
    out.original_length = signal.size();
    out.mode = mode;
    out.details.resize(levels);

    std::vector<double> current = signal;
    for (int l = 0; l < levels; ++l) {
        const std::vector<double> ext = detail::extend_for_level(current, mode, plan[l].padded);
        std::vector<double> approx;
        detail::periodic_split(ext, approx, out.details[l]);
        current = std::move(approx);
    }
    out.approximation = std::move(current);
    return out;
}

inline std::vector<double> idwt_db4(const WaveletCoeffs& coeffs) {
    const int levels = coeffs.levels();
    if (levels < 1)
        throw DataError("idwt_db4: no detail bands");
    const auto plan = detail::wavelet_plan(coeffs.original_length, levels, coeffs.mode);
    if (coeffs.approximation.size() != plan[levels - 1].band_len)
        throw DataError("idwt_db4: approximation has length " +
                        std::to_string(coeffs.approximation.size()) + ", expected " +
                        std::to_string(plan[levels - 1].band_len));
    for (int l = 0; l < levels; ++l)
        if (coeffs.details[l].size() != plan[l].band_len)
            throw DataError("idwt_db4: detail level " + std::to_string(l + 1) + " has length " +
                            std::to_string(coeffs.details[l].size()) + ", expected " +
                            std::to_string(plan[l].band_len));

    std::vector<double> current = coeffs.approximation;
    for (int l = levels - 1; l >= 0; --l) {
        std::vector<double> merged = detail::periodic_merge(current, coeffs.details[l]);
        if (plan[l].padded) merged.pop_back();
        if (coeffs.mode == WaveletBoundary::symmetric) {
            current.assign(merged.begin() + kSymApron, merged.begin() + kSymApron + plan[l].in_len);
        } else {
            current = std::move(merged);
        }
    }
    return current;
}

// sign(v) * max(|v| - t, 0), elementwise.
inline std::vector<double> soft_threshold(const std::vector<double>& values, double t) {
    if (t < 0.0)
        throw ConfigError("soft_threshold: threshold must be nonnegative");
    std::vector<double> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double v = values[i];
        const double mag = std::abs(v) - t;
        out[i] = mag > 0.0 ? (v < 0.0 ? -mag : mag) : 0.0;
    }
    return out;
}

namespace detail {

inline double median_abs(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    std::vector<double> mag(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) mag[i] = std::abs(v[i]);
    const std::size_t mid = mag.size() / 2;
    std::nth_element(mag.begin(), mag.begin() + mid, mag.end());
    double m = mag[mid];
    if (mag.size() % 2 == 0) {
        const double lower = *std::max_element(mag.begin(), mag.begin() + mid);
        m = 0.5 * (m + lower);
    }
    return m;
}

} // namespace detail

// Noise level estimate from the finest detail band: MAD / 0.6745.
inline double estimate_noise_sigma(const WaveletCoeffs& coeffs) {
    if (coeffs.details.empty())
        throw DataError("estimate_noise_sigma: no detail bands");
    return detail::median_abs(coeffs.details[0]) / 0.6745;
}

// Universal threshold sigma * sqrt(2 ln L) for a length-L signal.
inline double universal_threshold(double sigma, std::size_t length) {
    return sigma * std::sqrt(2.0 * std::log(static_cast<double>(length)));
}

struct DenoiseParams {
    std::size_t baseline_window = 500;
    int wavelet_levels = 5;
    WaveletBoundary boundary = WaveletBoundary::symmetric;
};

// Wavelet denoising of one recording: per lead, decompose, soft-threshold
// every detail band with the universal threshold, reconstruct. The
// approximation band is never thresholded; it carries the waveform
// morphology the classifier needs.
inline EcgRecording denoise(const EcgRecording& rec, const DenoiseParams& params) {
    EcgRecording out = rec;
    for (auto& lead : out.leads) {
        WaveletCoeffs coeffs = dwt_db4(lead, params.wavelet_levels, params.boundary);
        const double sigma = estimate_noise_sigma(coeffs);
        const double t = universal_threshold(sigma, lead.size());
        for (auto& band : coeffs.details) band = soft_threshold(band, t);
        lead = idwt_db4(coeffs);
    }
    return out;
}

} // namespace ecgra
