#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace covbalance {

/// Structural similarity over one global window with population statistics.
/// Intensities are expected in [0, 1]; the stabilizers assume unit dynamic
/// range (C1 = 0.01^2, C2 = 0.03^2).
struct SsimResult {
    double value = 0.0;
    std::vector<double> gradient;  // d(value)/d(prediction_i)
};

inline SsimResult ssim_global(const std::vector<double>& prediction,
                              const std::vector<double>& target) {
    if (prediction.empty() || prediction.size() != target.size()) {
        throw std::invalid_argument("ssim_global: images must match and be non-empty");
    }
    const double c1 = 0.01 * 0.01;
    const double c2 = 0.03 * 0.03;
    const double n = static_cast<double>(prediction.size());

    double mean_x = 0.0;
    double mean_y = 0.0;
    for (std::size_t i = 0; i < prediction.size(); ++i) {
        mean_x += prediction[i];
        mean_y += target[i];
    }
    mean_x /= n;
    mean_y /= n;

    double var_x = 0.0;
    double var_y = 0.0;
    double cov = 0.0;
    for (std::size_t i = 0; i < prediction.size(); ++i) {
        const double dx = prediction[i] - mean_x;
        const double dy = target[i] - mean_y;
        var_x += dx * dx;
        var_y += dy * dy;
        cov += dx * dy;
    }
    var_x /= n;
    var_y /= n;
    cov /= n;

    const double a1 = 2.0 * mean_x * mean_y + c1;
    const double a2 = 2.0 * cov + c2;
    const double b1 = mean_x * mean_x + mean_y * mean_y + c1;
    const double b2 = var_x + var_y + c2;
    const double denom = b1 * b2;

    SsimResult out;
    out.value = (a1 * a2) / denom;
    out.gradient.resize(prediction.size());
    for (std::size_t i = 0; i < prediction.size(); ++i) {
        const double da1 = 2.0 * mean_y / n;
        const double da2 = 2.0 * (target[i] - mean_y) / n;
        const double db1 = 2.0 * mean_x / n;
        const double db2 = 2.0 * (prediction[i] - mean_x) / n;
        out.gradient[i] =
            (da1 * a2 + a1 * da2) / denom - out.value * (db1 * b2 + b1 * db2) / denom;
    }
    return out;
}

/// Structural dissimilarity (1 - ssim) / 2, in [0, 1] for valid images.
inline SsimResult dssim_global(const std::vector<double>& prediction,
                               const std::vector<double>& target) {
    SsimResult s = ssim_global(prediction, target);
    s.value = 0.5 * (1.0 - s.value);
    for (double& g : s.gradient) g *= -0.5;
    return s;
}

}  // namespace covbalance
