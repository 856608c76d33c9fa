#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace cuspflow {

struct ExtrapolationResult {
    double value = 0.0;
    double err_est = 0.0; // difference between the last two diagonal entries
    bool converged = false;
};

// Richardson extrapolation for A(h) = A0 + c1 h^p + c2 h^{2p} + ... sampled on
// a geometric mesh h_k = h0 * ratio^k (0 < ratio < 1). samples[k] = A(h_k).
inline ExtrapolationResult richardson(const std::vector<double>& samples, double ratio,
                                      double p = 1.0) {
    ExtrapolationResult out;
    const size_t n = samples.size();
    if (n == 0) return out;
    std::vector<double> row = samples;
    double prev_diag = row[0];
    out.value = row[n - 1];
    for (size_t m = 1; m < n; ++m) {
        const double factor = std::pow(ratio, -p * static_cast<double>(m)) - 1.0;
        for (size_t k = 0; k + m < n; ++k)
            row[k] = row[k + 1] + (row[k + 1] - row[k]) / factor;
        out.err_est = std::abs(row[0] - prev_diag);
        prev_diag = row[0];
        out.value = row[0];
    }
    out.converged = n >= 3;
    return out;
}

// Repeated Aitken delta-squared acceleration of a linearly converging sequence.
inline ExtrapolationResult aitken(std::vector<double> seq) {
    ExtrapolationResult out;
    if (seq.empty()) return out;
    out.value = seq.back();
    while (seq.size() >= 3) {
        std::vector<double> next;
        next.reserve(seq.size() - 2);
        for (size_t i = 0; i + 2 < seq.size(); ++i) {
            const double d1 = seq[i + 1] - seq[i];
            const double d2 = seq[i + 2] - 2.0 * seq[i + 1] + seq[i];
            if (d2 == 0.0) {
                next.push_back(seq[i + 2]);
                continue;
            }
            next.push_back(seq[i] - d1 * d1 / d2);
        }
        out.err_est = std::abs(next.back() - out.value);
        out.value = next.back();
        out.converged = true;
        seq = std::move(next);
    }
    return out;
}

} // namespace cuspflow
