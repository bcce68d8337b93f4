#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "covbalance/weights.hpp"

namespace covbalance {

/// Trainable log-variances s_i = log(sigma_i^2), one per loss. They are
/// updated alongside the model parameters, not by a separate optimization.
struct UncertaintyState {
    std::vector<double> log_vars;

    explicit UncertaintyState(std::size_t loss_count)
        : log_vars(loss_count, 0.0) {
        if (loss_count == 0) {
            throw std::invalid_argument("UncertaintyState: need at least one loss");
        }
    }
};

struct UncertaintyEval {
    double objective = 0.0;
    std::vector<double> log_var_gradients;  // d objective / d s_i
};

/// Gaussian log-likelihood objective over the losses,
///
///   sum_i [ L_i / (2 sigma_i^2) + log sigma_i ]
///   = sum_i [ 0.5 exp(-s_i) L_i + 0.5 s_i ],
///
/// with the analytic gradient d/ds_i = 0.5 (1 - L_i exp(-s_i)). The
/// effective, unnormalized weight on loss i is 0.5 exp(-s_i); its
/// stationary point is sigma_i^2 = L_i, where every weighted term is 1/2.
inline UncertaintyEval uncertainty_objective(const UncertaintyState& state,
                                             std::span<const double> losses) {
    if (losses.size() != state.log_vars.size()) {
        throw std::invalid_argument("uncertainty_objective: one loss per log-variance");
    }
    UncertaintyEval eval;
    eval.log_var_gradients.resize(losses.size());
    for (std::size_t i = 0; i < losses.size(); ++i) {
        const double loss = losses[i];
        if (!(loss > 0.0) || !std::isfinite(loss)) {
            throw std::invalid_argument("uncertainty_objective: losses must be positive");
        }
        const double s = state.log_vars[i];
        const double precision = std::exp(-s);
        eval.objective += 0.5 * precision * loss + 0.5 * s;
        eval.log_var_gradients[i] = 0.5 * (1.0 - loss * precision);
    }
    return eval;
}

inline UncertaintyEval uncertainty_objective(const UncertaintyState& state,
                                             const std::vector<double>& losses) {
    return uncertainty_objective(state, std::span<const double>(losses));
}

/// The weights actually applied to the loss gradients: 0.5 exp(-s_i).
/// Deliberately unnormalized; their sum couples to the learning rate.
inline WeightVector uncertainty_raw_weights(const UncertaintyState& state) {
    WeightVector out{std::vector<double>(state.log_vars.size()), false};
    for (std::size_t i = 0; i < state.log_vars.size(); ++i) {
        out.weights[i] = 0.5 * std::exp(-state.log_vars[i]);
    }
    return out;
}

}  // namespace covbalance
