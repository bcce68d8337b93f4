#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "covbalance/run_config.hpp"

namespace covbalance {

/// Trajectory and summary of one training run. Weight rows hold the weights
/// exactly as applied to the gradients; when those are unnormalized (the
/// likelihood-based strategy) `normalized_weights` carries the comparable
/// convex-combination view as well.
struct RunRecord {
    RunConfig config;
    std::string label;  // file-name stem, defaults to the strategy name
    std::vector<std::string> loss_names;
    std::vector<int> loss_scales;
    bool weights_normalized = true;
    bool valid = true;
    std::string abort_reason;

    std::vector<std::uint64_t> steps;
    std::vector<std::vector<double>> losses;
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> normalized_weights;  // empty when weights are normalized
    std::vector<double> objectives;
    std::vector<double> dist_to_opt;  // NaN when the problem has no known optimum

    std::vector<double> final_losses;
    double final_objective = std::numeric_limits<double>::quiet_NaN();
    double final_dist = std::numeric_limits<double>::quiet_NaN();

    std::size_t row_count() const { return steps.size(); }

    /// Per-seed outcome vector for win-rate comparisons: the final losses,
    /// plus the final distance to optimum when one is known. All lower-better.
    std::vector<double> final_metrics() const {
        std::vector<double> m = final_losses;
        if (std::isfinite(final_dist)) m.push_back(final_dist);
        return m;
    }

    /// Mean total weight per resolution tag over rows past the burn-in, using
    /// the normalized weight view. Index = scale.
    std::vector<double> per_scale_weight_aggregate(double burn_in_fraction) const {
        const int max_scale = loss_scales.empty()
                                  ? 0
                                  : *std::max_element(loss_scales.begin(), loss_scales.end());
        std::vector<double> agg(static_cast<std::size_t>(max_scale) + 1, 0.0);
        const auto& view = weights_normalized ? weights : normalized_weights;
        const double cutoff =
            burn_in_fraction * static_cast<double>(config.iterations);
        std::size_t used = 0;
        for (std::size_t r = 0; r < view.size(); ++r) {
            if (static_cast<double>(steps[r]) <= cutoff) continue;
            ++used;
            for (std::size_t i = 0; i < loss_scales.size(); ++i) {
                agg[static_cast<std::size_t>(loss_scales[i])] += view[r][i];
            }
        }
        if (used > 0) {
            for (double& v : agg) v /= static_cast<double>(used);
        }
        return agg;
    }
};

enum class MetricDirection { LowerIsBetter, HigherIsBetter };

/// Majority vote of a against b: per instance, count metrics each side wins
/// (strict, direction-aware); the instance goes to the strict majority and
/// ties split 0.5/0.5. Returns the fraction of instances won by a.
///
/// Computed in half-win integer units so that self-comparison is exactly 0.5
/// and compute_win_rate(a, b) + compute_win_rate(b, a) is exactly 1.
inline double compute_win_rate(const std::vector<std::vector<double>>& a,
                               const std::vector<std::vector<double>>& b,
                               const std::vector<MetricDirection>& directions) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("compute_win_rate: instance counts differ");
    }
    if (a.empty()) {
        throw std::invalid_argument("compute_win_rate: no instances");
    }
    std::uint64_t half_wins = 0;  // 2 per instance won, 1 per tie
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].size() != directions.size() || b[i].size() != directions.size()) {
            throw std::invalid_argument("compute_win_rate: metric arity mismatch");
        }
        int wins_a = 0;
        int wins_b = 0;
        for (std::size_t m = 0; m < directions.size(); ++m) {
            const bool lower = directions[m] == MetricDirection::LowerIsBetter;
            const double av = a[i][m];
            const double bv = b[i][m];
            if (lower ? av < bv : av > bv) {
                ++wins_a;
            } else if (lower ? bv < av : bv > av) {
                ++wins_b;
            }
        }
        if (wins_a > wins_b) {
            half_wins += 2;
        } else if (wins_a == wins_b) {
            half_wins += 1;
        }
    }
    const std::uint64_t total = 2 * static_cast<std::uint64_t>(a.size());
    if (2 * half_wins <= total) {
        return static_cast<double>(half_wins) / static_cast<double>(total);
    }
    return 1.0 - static_cast<double>(total - half_wins) / static_cast<double>(total);
}

namespace detail {

inline double distance(const std::vector<double>& x, const std::vector<double>& y) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        s += d * d;
    }
    return std::sqrt(s);
}

}  // namespace detail

/// One deterministic training run. Configuration problems (unknown names,
/// strategy needing gradients the problem cannot supply) throw ConfigError
/// before any step; runtime failures mid-run return a partial record with
/// valid = false and the reason recorded.
inline RunRecord run_experiment(const RunConfig& config) {
    if (config.iterations == 0) {
        throw ConfigError("run.iterations: must be positive");
    }
    if (config.record_every == 0) {
        throw ConfigError("run.record_every: must be positive");
    }
    std::shared_ptr<const Problem> problem = make_problem(config.problem);
    std::unique_ptr<WeightingStrategy> strategy =
        make_strategy(config.strategy, problem->loss_count(), config.optimizer);
    if (strategy->requires_gradients() && !problem->has_gradients()) {
        throw ConfigError("strategy.kind: '" + strategy->name() +
                          "' needs gradients but problem '" + config.problem.kind +
                          "' provides none");
    }
    Optimizer optimizer = make_optimizer(config.optimizer);

    RunRecord rec;
    rec.config = config;
    rec.label = strategy->name();
    rec.loss_names = problem->loss_names();
    rec.loss_scales = problem->loss_scales();

    std::mt19937_64 rng(config.seed);
    std::vector<double> params = problem->initial_params(rng);
    const std::optional<std::vector<double>> optimum = problem->optimum();
    const bool step_params = problem->has_gradients();

    for (std::uint64_t t = 1; t <= config.iterations; ++t) {
        LossObservation obs;
        StrategyStep out;
        try {
            obs = problem->evaluate(params, t, rng);
            for (double v : obs.losses) {
                if (!std::isfinite(v)) throw std::runtime_error("non-finite loss value");
            }
            out = strategy->observe(obs);
        } catch (const std::exception& e) {
            rec.valid = false;
            rec.abort_reason = "step " + std::to_string(t) + ": " + e.what();
            break;
        }
        if (t == 1) rec.weights_normalized = out.weights.normalized;

        const bool record = (t - 1) % config.record_every == 0;
        if (record) {
            rec.steps.push_back(t);
            rec.losses.push_back(obs.losses);
            rec.weights.push_back(out.weights.weights);
            if (!out.weights.normalized) {
                rec.normalized_weights.push_back(normalized_copy(out.weights).weights);
            }
            rec.objectives.push_back(out.objective);
            rec.dist_to_opt.push_back(optimum ? detail::distance(params, *optimum)
                                              : std::numeric_limits<double>::quiet_NaN());
        }

        if (step_params) {
            std::vector<double> combined(params.size(), 0.0);
            const auto& grads = *obs.gradients;
            for (std::size_t i = 0; i < grads.size(); ++i) {
                const double w = out.weights[i];
                for (std::size_t j = 0; j < combined.size(); ++j) {
                    combined[j] += w * grads[i][j];
                }
            }
            try {
                optimizer.step(params, combined);
            } catch (const std::exception& e) {
                rec.valid = false;
                rec.abort_reason = "step " + std::to_string(t) + ": " + e.what();
                break;
            }
        }

        rec.final_losses = obs.losses;
        rec.final_objective = out.objective;
    }
    if (optimum && rec.valid) rec.final_dist = detail::distance(params, *optimum);
    return rec;
}

namespace detail {

/// Runs `count` jobs with at most `jobs` worker threads; the first exception
/// thrown by any job is rethrown after all workers finish.
template <typename Fn>
void parallel_for(std::size_t count, std::size_t jobs, Fn&& fn) {
    if (count == 0) return;
    jobs = std::max<std::size_t>(1, std::min(jobs, count));
    if (jobs == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(count);
    std::vector<std::thread> workers;
    workers.reserve(jobs);
    for (std::size_t w = 0; w < jobs; ++w) {
        workers.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
                try {
                    fn(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    }
    for (auto& t : workers) t.join();
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace detail

/// Applies one sweep value to a copy of the base configuration. Values are
/// the textual CLI/file forms ("full", "20", "1e-2", "loss_cov").
inline RunConfig apply_axis(const RunConfig& base, const std::string& axis,
                            const std::string& value) {
    RunConfig cfg = base;
    auto numeric = [&](const char* key) {
        try {
            std::size_t used = 0;
            const double v = std::stod(value, &used);
            if (used != value.size()) throw std::invalid_argument("trailing characters");
            return v;
        } catch (const std::exception&) {
            throw ConfigError(std::string(key) + ": not a number: '" + value + "'");
        }
    };
    if (axis == "decay") {
        if (value == "full") {
            cfg.strategy.decay = DecaySpec::full_history();
        } else {
            const double f = numeric("sweep.decay");
            if (!(f > 1.0)) throw ConfigError("sweep.decay: fixed factor must be > 1");
            cfg.strategy.decay = DecaySpec::fixed_factor(f);
        }
    } else if (axis == "lr") {
        const double lr = numeric("sweep.lr");
        if (!(lr > 0.0)) throw ConfigError("sweep.lr: must be positive");
        cfg.optimizer.lr = lr;
    } else if (axis == "temperature") {
        const double temp = numeric("sweep.temperature");
        if (!(temp > 0.0)) throw ConfigError("sweep.temperature: must be positive");
        cfg.strategy.temperature = temp;
    } else if (axis == "variant") {
        cfg.strategy.variant = parse_variant(value);
    } else {
        std::string msg = "sweep.axis: unknown value '" + axis + "', valid:";
        for (const auto& n : axis_catalog()) msg += " " + n;
        throw ConfigError(msg);
    }
    cfg.experiment = base.experiment + "/" + axis + "_" + value;
    return cfg;
}

/// One run per sweep value, seeds held fixed. Runs execute in parallel up to
/// `jobs`; records come back in value order.
inline std::vector<RunRecord> sweep(const RunConfig& base, const std::string& axis,
                                    const std::vector<std::string>& values,
                                    std::size_t jobs = 1) {
    if (values.empty()) {
        throw ConfigError("sweep.values: empty value list");
    }
    std::vector<RunConfig> configs;
    configs.reserve(values.size());
    for (const auto& v : values) configs.push_back(apply_axis(base, axis, v));

    std::vector<RunRecord> records(configs.size());
    detail::parallel_for(configs.size(), jobs,
                         [&](std::size_t i) { records[i] = run_experiment(configs[i]); });
    return records;
}

/// Pairwise win-rate comparison across strategies over a battery of seeds
/// (base.seed, base.seed + 1, ...). Matrix entry [i][j] is the rate at which
/// strategy i beats strategy j on final metrics.
struct CompareResult {
    std::vector<std::string> strategies;
    std::vector<std::vector<double>> win_rates;
    std::vector<RunRecord> records;  // strategy-major, then seed
};

inline CompareResult compare_strategies(const RunConfig& base,
                                        const std::vector<std::string>& strategies,
                                        std::size_t seed_count, std::size_t jobs = 1) {
    if (strategies.empty()) {
        throw ConfigError("compare.strategies: empty strategy list");
    }
    if (seed_count == 0) {
        throw ConfigError("compare.seeds: must be positive");
    }
    // Fail on bad strategy names before launching the battery.
    for (const auto& name : strategies) {
        const auto& known = strategy_catalog();
        if (std::find(known.begin(), known.end(), name) == known.end()) {
            std::string msg = "compare.strategies: unknown strategy '" + name + "', valid:";
            for (const auto& n : known) msg += " " + n;
            throw ConfigError(msg);
        }
    }
    std::vector<RunConfig> configs;
    for (const auto& name : strategies) {
        RunConfig cfg = base;
        cfg.strategy.kind = name;
        for (std::size_t k = 0; k < seed_count; ++k) {
            cfg.seed = base.seed + k;
            configs.push_back(cfg);
        }
    }

    CompareResult result;
    result.strategies = strategies;
    result.records.resize(configs.size());
    detail::parallel_for(configs.size(), jobs, [&](std::size_t i) {
        result.records[i] = run_experiment(configs[i]);
    });

    std::vector<std::vector<std::vector<double>>> metrics(strategies.size());
    for (std::size_t s = 0; s < strategies.size(); ++s) {
        for (std::size_t k = 0; k < seed_count; ++k) {
            const RunRecord& rec = result.records[s * seed_count + k];
            if (!rec.valid) {
                throw std::runtime_error("compare: run aborted (" + rec.label + " seed " +
                                         std::to_string(rec.config.seed) +
                                         "): " + rec.abort_reason);
            }
            metrics[s].push_back(rec.final_metrics());
        }
    }
    const std::size_t arity = metrics.front().front().size();
    const std::vector<MetricDirection> directions(arity, MetricDirection::LowerIsBetter);

    result.win_rates.assign(strategies.size(),
                            std::vector<double>(strategies.size(), 0.5));
    for (std::size_t i = 0; i < strategies.size(); ++i) {
        for (std::size_t j = 0; j < strategies.size(); ++j) {
            if (i == j) continue;
            result.win_rates[i][j] = compute_win_rate(metrics[i], metrics[j], directions);
        }
    }
    return result;
}

}  // namespace covbalance
