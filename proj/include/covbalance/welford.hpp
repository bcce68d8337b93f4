#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace covbalance {

/// How an online accumulator weights a new observation against its history.
///
/// FullHistory gives observation t weight 1/t, so the estimate converges to
/// the statistics of the whole stream. FixedFactor(f) gives every observation
/// after the first a constant weight 1/f, which turns the mean into an
/// exponential moving average with smoothing 1/f and lets old observations
/// decay.
class DecaySpec {
  public:
    static DecaySpec full_history() { return DecaySpec(0.0); }

    static DecaySpec fixed_factor(double factor) {
        if (!(factor > 1.0)) {
            throw std::invalid_argument("DecaySpec: fixed factor must be > 1");
        }
        return DecaySpec(factor);
    }

    bool is_full_history() const { return factor_ == 0.0; }

    double factor() const {
        if (is_full_history()) {
            throw std::logic_error("DecaySpec: full-history mode has no factor");
        }
        return factor_;
    }

    bool operator==(const DecaySpec& other) const = default;

  private:
    explicit DecaySpec(double factor) : factor_(factor) {}
    double factor_;  // 0 encodes full history
};

/// Streaming mean and standard deviation via Welford's single-pass update.
///
/// Tracks the running mean and the scaled second moment M, where the update
/// for observation x at effective step t is
///
///   mean_t = (1 - 1/t) mean_{t-1} + (1/t) x
///   M_t    = (1 - 1/t) M_{t-1}    + (1/t) (x - mean_{t-1}) (x - mean_t)
///
/// With full history (t = observation count) M converges to the population
/// variance; std() returns sqrt(M). The first observation initializes
/// mean = x, M = 0. M is clamped at zero to absorb negative round-off.
class WelfordAccumulator {
  public:
    explicit WelfordAccumulator(DecaySpec decay = DecaySpec::full_history())
        : decay_(decay) {}

    void update(double x) {
        if (!std::isfinite(x)) {
            throw std::invalid_argument("WelfordAccumulator: observation must be finite");
        }
        ++count_;
        if (count_ == 1) {
            mean_ = x;
            second_moment_ = 0.0;
            return;
        }
        const double w =
            decay_.is_full_history() ? 1.0 / static_cast<double>(count_) : 1.0 / decay_.factor();
        const double delta = x - mean_;
        const double new_mean = mean_ + w * delta;
        second_moment_ = (1.0 - w) * second_moment_ + w * delta * (x - new_mean);
        if (second_moment_ < 0.0) second_moment_ = 0.0;
        mean_ = new_mean;
    }

    double mean() const {
        require_nonempty();
        return mean_;
    }

    /// The running M (population-style variance under full history).
    double variance() const {
        require_nonempty();
        return second_moment_;
    }

    double std() const { return std::sqrt(variance()); }

    std::uint64_t count() const { return count_; }
    bool empty() const { return count_ == 0; }
    const DecaySpec& decay() const { return decay_; }

  private:
    void require_nonempty() const {
        if (count_ == 0) {
            throw std::logic_error("WelfordAccumulator: no observations yet");
        }
    }

    std::uint64_t count_ = 0;
    double mean_ = 0.0;
    double second_moment_ = 0.0;
    DecaySpec decay_;
};

}  // namespace covbalance
