#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "covbalance/weights.hpp"
#include "covbalance/welford.hpp"

namespace covbalance {

/// Which dispersion score drives the weights.
///
/// The default scores a loss by the coefficient of variation of its loss
/// ratio (current loss over running mean). The Loss* variants use the raw
/// loss statistics instead of the ratio; the *Inverse variants flip the
/// score so low-variance losses get the high weights.
enum class CovVariant {
    RatioCov,      // sigma_l / mu_l
    LossCov,       // sigma_L / mu_L
    RatioInverse,  // mu_l / sigma_l
    LossInverse,   // mu_L / sigma_L
};

inline std::string_view to_string(CovVariant v) {
    switch (v) {
        case CovVariant::RatioCov: return "ratio_cov";
        case CovVariant::LossCov: return "loss_cov";
        case CovVariant::RatioInverse: return "ratio_inverse";
        case CovVariant::LossInverse: return "loss_inverse";
    }
    throw std::logic_error("to_string: bad CovVariant");
}

/// Running statistics backing the variation-based weights: per loss, the
/// stream of raw loss values and the stream of loss ratios, both tracked
/// with the same decay.
struct CovState {
    std::vector<WelfordAccumulator> loss_stats;   // mean/std of L
    std::vector<WelfordAccumulator> ratio_stats;  // mean/std of l = L_t / mean(L)_{t-1}
    CovVariant variant = CovVariant::RatioCov;

    CovState(std::size_t loss_count, CovVariant v = CovVariant::RatioCov,
             DecaySpec decay = DecaySpec::full_history())
        : loss_stats(loss_count, WelfordAccumulator(decay)),
          ratio_stats(loss_count, WelfordAccumulator(decay)),
          variant(v) {
        if (loss_count == 0) {
            throw std::invalid_argument("CovState: need at least one loss");
        }
    }

    std::size_t loss_count() const { return loss_stats.size(); }
    std::uint64_t step_count() const { return loss_stats.front().count(); }
};

namespace detail {

inline constexpr double kSigmaFloor = 1e-12;  // clamp before inverse-variant division

inline double cov_score(const WelfordAccumulator& stats, bool inverse) {
    const double mu = stats.mean();
    const double sigma = stats.std();
    if (inverse) {
        return mu / std::max(sigma, kSigmaFloor);
    }
    return mu > 0.0 ? sigma / mu : 0.0;
}

}  // namespace detail

/// Feed one step's loss values; updates the loss and ratio statistics and
/// returns the normalized weights for this step.
///
/// The ratio for step one is defined as 1, and the first emitted weights are
/// the equal-weight fallback. A zero running loss mean also maps the ratio
/// to 1. When every score is zero (constant streams) the weights fall back
/// to 1/n.
inline WeightVector cov_observe(CovState& state, std::span<const double> losses) {
    const std::size_t n = state.loss_count();
    if (losses.size() != n) {
        throw std::invalid_argument("cov_observe: one loss value per tracked loss");
    }
    for (double v : losses) {
        if (!std::isfinite(v) || v < 0.0) {
            throw std::invalid_argument("cov_observe: losses must be finite and non-negative");
        }
    }

    const bool first = state.loss_stats.front().empty();
    for (std::size_t i = 0; i < n; ++i) {
        double ratio = 1.0;
        if (!first) {
            const double mu_prev = state.loss_stats[i].mean();
            if (mu_prev > 0.0) ratio = losses[i] / mu_prev;
        }
        state.loss_stats[i].update(losses[i]);
        state.ratio_stats[i].update(ratio);
    }
    if (first) return equal_weights(n);

    const bool use_ratio =
        state.variant == CovVariant::RatioCov || state.variant == CovVariant::RatioInverse;
    const bool inverse =
        state.variant == CovVariant::RatioInverse || state.variant == CovVariant::LossInverse;
    std::vector<double> scores(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& stats = use_ratio ? state.ratio_stats[i] : state.loss_stats[i];
        scores[i] = detail::cov_score(stats, inverse);
        total += scores[i];
    }
    if (total <= 0.0) return equal_weights(n);

    WeightVector out{std::move(scores), true};
    for (double& w : out.weights) w /= total;
    return out;
}

inline WeightVector cov_observe(CovState& state, const std::vector<double>& losses) {
    return cov_observe(state, std::span<const double>(losses));
}

}  // namespace covbalance
