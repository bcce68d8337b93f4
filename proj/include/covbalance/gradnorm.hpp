#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "covbalance/weights.hpp"

namespace covbalance {

/// Gradient-normalization weights. `initial_losses` is captured on the
/// first call; the temperature is an exponent on the raw score before
/// normalization.
struct GradNormConfig {
    double temperature = 1.5;
    std::vector<double> initial_losses;

    explicit GradNormConfig(double temp = 1.5) : temperature(temp) {
        if (!(temp > 0.0)) {
            throw std::invalid_argument("GradNormConfig: temperature must be positive");
        }
    }
};

/// Score each loss by its training rate against its gradient norm,
///
///   x_i = (L_i(t) / L_i(0)) / g_i(t),
///
/// then normalize x_i^T over the losses. The first call captures L_i(0)
/// and returns equal weights.
inline WeightVector gradnorm_weights(std::span<const double> losses, GradNormConfig& config,
                                     std::span<const double> grad_norms) {
    const std::size_t n = losses.size();
    if (n == 0) {
        throw std::invalid_argument("gradnorm_weights: need at least one loss");
    }
    if (grad_norms.size() != n) {
        throw std::invalid_argument("gradnorm_weights: one gradient norm per loss");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!(losses[i] > 0.0) || !std::isfinite(losses[i])) {
            throw std::invalid_argument("gradnorm_weights: losses must be positive");
        }
        if (!(grad_norms[i] > 0.0) || !std::isfinite(grad_norms[i])) {
            throw std::invalid_argument("gradnorm_weights: gradient norms must be positive");
        }
    }
    if (config.initial_losses.empty()) {
        config.initial_losses.assign(losses.begin(), losses.end());
        return equal_weights(n);
    }
    if (config.initial_losses.size() != n) {
        throw std::invalid_argument("gradnorm_weights: loss count changed since first step");
    }

    std::vector<double> scores(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double raw = (losses[i] / config.initial_losses[i]) / grad_norms[i];
        scores[i] = std::pow(raw, config.temperature);
        total += scores[i];
    }
    WeightVector out{std::move(scores), true};
    for (double& w : out.weights) w /= total;
    return out;
}

inline WeightVector gradnorm_weights(const std::vector<double>& losses, GradNormConfig& config,
                                     const std::vector<double>& grad_norms) {
    return gradnorm_weights(std::span<const double>(losses), config,
                            std::span<const double>(grad_norms));
}

}  // namespace covbalance
