#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "ecgra/error.hpp"
#include "ecgra/recording.hpp"

namespace ecgra {

// Cut-off frequency of the moving-average low-pass used for baseline
// estimation: f_co = 0.443 * fs / N.
inline double moving_average_cutoff(double fs, std::size_t window) {
    if (!(fs > 0.0))
        throw ConfigError("moving_average_cutoff: fs must be positive");
    if (window < 1)
        throw ConfigError("moving_average_cutoff: window must be at least 1");
    return 0.443 * fs / static_cast<double>(window);
}

namespace detail {

// Half-sample mirror index: ...x1 x0 | x0 x1 ... xe | xe ... (edge repeated).
inline std::size_t mirror_index(long long i, long long n) {
    const long long period = 2 * n;
    long long m = i % period;
    if (m < 0) m += period;
    return static_cast<std::size_t>(m < n ? m : period - 1 - m);
}

} // namespace detail

// Centered moving average with symmetric (mirror) edge extension.
// Window covers [i - N/2, i + N/2 - 1] for even N and
// [i - (N-1)/2, i + (N-1)/2] for odd N; output length equals input length.
inline std::vector<double> estimate_baseline(const std::vector<double>& signal,
                                             std::size_t window) {
    if (signal.empty())
        throw DataError("estimate_baseline: empty signal");
    if (window < 1)
        throw ConfigError("estimate_baseline: window must be at least 1");
    if (window == 1) return signal;

    const long long n = static_cast<long long>(signal.size());
    const long long nw = static_cast<long long>(window);
    const long long lo = -(nw / 2);            // inclusive offset
    const long long hi = lo + nw - 1;          // inclusive offset

    // prefix sums over the mirror-extended signal index range [lo, n-1+hi]
    const long long ext_lo = lo;
    const long long ext_hi = n - 1 + hi;
    std::vector<double> prefix(static_cast<std::size_t>(ext_hi - ext_lo + 2), 0.0);
    for (long long i = ext_lo; i <= ext_hi; ++i) {
        const std::size_t p = static_cast<std::size_t>(i - ext_lo);
        prefix[p + 1] = prefix[p] + signal[detail::mirror_index(i, n)];
    }

    std::vector<double> out(signal.size());
    const double inv = 1.0 / static_cast<double>(window);
    for (long long i = 0; i < n; ++i) {
        const std::size_t a = static_cast<std::size_t>(i + lo - ext_lo);
        const std::size_t b = static_cast<std::size_t>(i + hi - ext_lo + 1);
        out[static_cast<std::size_t>(i)] = (prefix[b] - prefix[a]) * inv;
    }
    return out;
}

// Subtracts the moving-average baseline estimate from every lead.
inline EcgRecording remove_baseline(const EcgRecording& rec, std::size_t window) {
    EcgRecording out = rec;
    for (auto& lead : out.leads) {
        const std::vector<double> base = estimate_baseline(lead, window);
        for (std::size_t i = 0; i < lead.size(); ++i) lead[i] -= base[i];
    }
    return out;
}

// Per-lead z-score: zero mean, unit population standard deviation.
inline EcgRecording zscore_normalize(const EcgRecording& rec) {
    EcgRecording out = rec;
    for (std::size_t l = 0; l < out.leads.size(); ++l) {
        auto& lead = out.leads[l];
        if (lead.empty())
            throw DataError("zscore_normalize: empty lead");
        double mean = 0.0;
        for (double v : lead) mean += v;
        mean /= static_cast<double>(lead.size());
        double var = 0.0;
        for (double v : lead) var += (v - mean) * (v - mean);
        var /= static_cast<double>(lead.size());
        if (var <= 0.0)
            throw NumericError("zscore_normalize: lead " + std::string(kLeadNames[l]) +
                               " of recording '" + rec.id + "' has zero variance");
        const double inv_sd = 1.0 / std::sqrt(var);
        for (double& v : lead) v = (v - mean) * inv_sd;
    }
    return out;
}

} // namespace ecgra
