#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace covbalance {

/// Per-loss combination coefficients. When `normalized` is set the entries
/// sum to one; Uncertainty Weighting emits unnormalized vectors.
struct WeightVector {
    std::vector<double> weights;
    bool normalized = false;

    std::size_t size() const { return weights.size(); }
    double operator[](std::size_t i) const { return weights[i]; }
};

/// One training step's view of the objective: the per-loss values and,
/// when the problem supports them, the per-loss gradients over the shared
/// parameter vector.
struct LossObservation {
    std::vector<double> losses;
    std::optional<std::vector<std::vector<double>>> gradients;
    std::uint64_t step = 0;

    bool has_gradients() const { return gradients.has_value(); }
};

inline void validate_observation(const LossObservation& obs) {
    if (obs.losses.empty()) {
        throw std::invalid_argument("LossObservation: no losses");
    }
    for (double v : obs.losses) {
        if (!std::isfinite(v)) {
            throw std::invalid_argument("LossObservation: non-finite loss value");
        }
    }
    if (obs.gradients) {
        if (obs.gradients->size() != obs.losses.size()) {
            throw std::invalid_argument("LossObservation: one gradient per loss required");
        }
        const std::size_t dim = obs.gradients->empty() ? 0 : obs.gradients->front().size();
        for (const auto& g : *obs.gradients) {
            if (g.size() != dim) {
                throw std::invalid_argument("LossObservation: gradient dimensions differ");
            }
        }
    }
}

/// Normalized vector with every entry 1/n.
inline WeightVector equal_weights(std::size_t n) {
    if (n == 0) {
        throw std::invalid_argument("equal_weights: need at least one loss");
    }
    return WeightVector{std::vector<double>(n, 1.0 / static_cast<double>(n)), true};
}

/// Divides by the sum so the entries form a convex combination.
inline WeightVector static_weights(std::span<const double> raw) {
    if (raw.empty()) {
        throw std::invalid_argument("static_weights: need at least one weight");
    }
    double sum = 0.0;
    for (double v : raw) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw std::invalid_argument("static_weights: weights must be positive and finite");
        }
        sum += v;
    }
    WeightVector out{std::vector<double>(raw.size()), true};
    for (std::size_t i = 0; i < raw.size(); ++i) out.weights[i] = raw[i] / sum;
    return out;
}

inline WeightVector static_weights(const std::vector<double>& raw) {
    return static_weights(std::span<const double>(raw));
}

/// Normalized copy of an arbitrary non-negative weight vector. A zero sum
/// falls back to equal weights.
inline WeightVector normalized_copy(const WeightVector& w) {
    if (w.weights.empty()) {
        throw std::invalid_argument("normalized_copy: empty weight vector");
    }
    double sum = 0.0;
    for (double v : w.weights) sum += v;
    if (sum <= 0.0) return equal_weights(w.weights.size());
    WeightVector out{std::vector<double>(w.weights.size()), true};
    for (std::size_t i = 0; i < w.weights.size(); ++i) out.weights[i] = w.weights[i] / sum;
    return out;
}

}  // namespace covbalance
