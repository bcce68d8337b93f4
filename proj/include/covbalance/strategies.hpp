#pragma once

#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "covbalance/cov_weighting.hpp"
#include "covbalance/gradnorm.hpp"
#include "covbalance/mgda.hpp"
#include "covbalance/optimizer.hpp"
#include "covbalance/uncertainty.hpp"
#include "covbalance/weights.hpp"

namespace covbalance {

/// One step's output: the weights to combine gradients with (raw, not
/// re-normalized) and the scalar objective the run is optimizing.
struct StrategyStep {
    WeightVector weights;
    double objective = 0.0;
};

/// Per-step weighting scheme. observe() consumes the step-t observation and
/// emits the weights applied to the step-t gradients; any internal state
/// (running statistics, learned log-variances) advances in the same call.
class WeightingStrategy {
  public:
    virtual ~WeightingStrategy() = default;
    virtual std::string name() const = 0;
    virtual bool requires_gradients() const = 0;
    virtual StrategyStep observe(const LossObservation& obs) = 0;
};

namespace detail {

inline double weighted_sum(const WeightVector& w, const std::vector<double>& losses) {
    double s = 0.0;
    for (std::size_t i = 0; i < losses.size(); ++i) s += w[i] * losses[i];
    return s;
}

inline const std::vector<std::vector<double>>& require_gradients(const LossObservation& obs,
                                                                 const char* who) {
    if (!obs.gradients) {
        throw std::invalid_argument(std::string(who) + ": observation carries no gradients");
    }
    return *obs.gradients;
}

}  // namespace detail

class EqualStrategy final : public WeightingStrategy {
  public:
    explicit EqualStrategy(std::size_t loss_count) : weights_(equal_weights(loss_count)) {}

    std::string name() const override { return "equal"; }
    bool requires_gradients() const override { return false; }

    StrategyStep observe(const LossObservation& obs) override {
        if (obs.losses.size() != weights_.size()) {
            throw std::invalid_argument("equal: loss count changed");
        }
        return {weights_, detail::weighted_sum(weights_, obs.losses)};
    }

  private:
    WeightVector weights_;
};

class StaticStrategy final : public WeightingStrategy {
  public:
    explicit StaticStrategy(const std::vector<double>& raw) : weights_(static_weights(raw)) {}

    std::string name() const override { return "static"; }
    bool requires_gradients() const override { return false; }

    StrategyStep observe(const LossObservation& obs) override {
        if (obs.losses.size() != weights_.size()) {
            throw std::invalid_argument("static: loss count changed");
        }
        return {weights_, detail::weighted_sum(weights_, obs.losses)};
    }

  private:
    WeightVector weights_;
};

class CovStrategy final : public WeightingStrategy {
  public:
    CovStrategy(std::size_t loss_count, CovVariant variant, DecaySpec decay)
        : state_(loss_count, variant, decay) {}

    std::string name() const override { return "cov"; }
    bool requires_gradients() const override { return false; }
    CovVariant variant() const { return state_.variant; }

    StrategyStep observe(const LossObservation& obs) override {
        WeightVector w = cov_observe(state_, obs.losses);
        return {w, detail::weighted_sum(w, obs.losses)};
    }

  private:
    CovState state_;
};

/// Learns one log-variance per loss; the emitted weights are the raw
/// 0.5 * exp(-s_i) coefficients of its likelihood objective, and the
/// log-variances take an optimizer step of their own each observation.
class UncertaintyStrategy final : public WeightingStrategy {
  public:
    UncertaintyStrategy(std::size_t loss_count, Optimizer log_var_optimizer)
        : state_(loss_count), opt_(std::move(log_var_optimizer)) {}

    std::string name() const override { return "uncertainty"; }
    bool requires_gradients() const override { return false; }

    StrategyStep observe(const LossObservation& obs) override {
        UncertaintyEval eval = uncertainty_objective(state_, obs.losses);
        WeightVector w = uncertainty_raw_weights(state_);
        opt_.step(state_.log_vars, eval.log_var_gradients);
        return {std::move(w), eval.objective};
    }

    const std::vector<double>& log_vars() const { return state_.log_vars; }

  private:
    UncertaintyState state_;
    Optimizer opt_;
};

class GradNormStrategy final : public WeightingStrategy {
  public:
    explicit GradNormStrategy(double temperature) : config_(temperature) {}

    std::string name() const override { return "gradnorm"; }
    bool requires_gradients() const override { return true; }

    StrategyStep observe(const LossObservation& obs) override {
        const auto& grads = detail::require_gradients(obs, "gradnorm");
        std::vector<double> norms(grads.size());
        for (std::size_t i = 0; i < grads.size(); ++i) {
            double s = 0.0;
            for (double v : grads[i]) s += v * v;
            norms[i] = std::sqrt(s);
        }
        WeightVector w = gradnorm_weights(obs.losses, config_, norms);
        return {w, detail::weighted_sum(w, obs.losses)};
    }

  private:
    GradNormConfig config_;
};

class MgdaStrategy final : public WeightingStrategy {
  public:
    explicit MgdaStrategy(FrankWolfeOptions options = {}) : options_(options) {}

    std::string name() const override { return "mgda"; }
    bool requires_gradients() const override { return true; }

    StrategyStep observe(const LossObservation& obs) override {
        const auto& grads = detail::require_gradients(obs, "mgda");
        WeightVector w = mgda_weights(grads, options_);
        return {w, detail::weighted_sum(w, obs.losses)};
    }

  private:
    FrankWolfeOptions options_;
};

}  // namespace covbalance
