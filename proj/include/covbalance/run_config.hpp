#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "covbalance/optimizer.hpp"
#include "covbalance/problems.hpp"
#include "covbalance/strategies.hpp"

namespace covbalance {

/// Configuration and validation failures; the message names the offending
/// key so the CLI can surface it at exit code 2.
class ConfigError : public std::runtime_error {
  public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct ProblemSpec {
    std::string kind = "quadratic_shared";
    std::size_t losses = 2;       // loss families for quadratics and streams
    std::size_t dim = 4;          // parameter dimension for quadratics
    double noise = 0.0;           // value-noise amplitude (problem-specific meaning)
    std::uint64_t gen_seed = 7;   // seeds the deterministic instance generator
    double trend = 1.0;           // stream decay per step
    std::size_t scales = 4;       // multiscale resolutions
    std::size_t sides = 2;        // multiscale left/right pairing
    long designated = -1;         // multiscale attenuated family; -1 = last
    std::string base = "quadratic";  // multiscale base: quadratic | image
    std::string target;           // image target PGM path; empty = procedural
    std::size_t width = 16;       // procedural target size
    std::size_t height = 16;
};

struct StrategySpec {
    std::string kind = "cov";
    CovVariant variant = CovVariant::RatioCov;
    DecaySpec decay = DecaySpec::full_history();
    double temperature = 1.5;           // gradnorm
    std::vector<double> fixed_weights;  // static
};

struct OptimizerSpec {
    std::string kind = "sgd";
    double lr = 1e-4;
    double momentum = 0.0;   // sgd
    double beta1 = 0.9;      // adam
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct RunConfig {
    ProblemSpec problem;
    StrategySpec strategy;
    OptimizerSpec optimizer;
    std::uint64_t iterations = 1000;
    std::uint64_t seed = 1;
    std::uint64_t record_every = 1;
    std::string experiment = "exp";
};

inline const std::vector<std::string>& strategy_catalog() {
    static const std::vector<std::string> names = {"equal",       "static",   "cov",
                                                   "uncertainty", "gradnorm", "mgda"};
    return names;
}

inline const std::vector<std::string>& variant_catalog() {
    static const std::vector<std::string> names = {"ratio_cov", "loss_cov", "ratio_inverse",
                                                   "loss_inverse"};
    return names;
}

inline const std::vector<std::string>& problem_catalog() {
    static const std::vector<std::string> names = {"quadratic", "quadratic_shared", "mixed_norm",
                                                   "image_fit", "stream", "multiscale"};
    return names;
}

inline const std::vector<std::string>& axis_catalog() {
    static const std::vector<std::string> names = {"decay", "lr", "temperature", "variant"};
    return names;
}

inline CovVariant parse_variant(const std::string& name) {
    for (CovVariant v : {CovVariant::RatioCov, CovVariant::LossCov, CovVariant::RatioInverse,
                         CovVariant::LossInverse}) {
        if (name == to_string(v)) return v;
    }
    std::string msg = "strategy.variant: unknown value '" + name + "', valid:";
    for (const auto& n : variant_catalog()) msg += " " + n;
    throw ConfigError(msg);
}

inline std::shared_ptr<const Problem> make_problem(const ProblemSpec& spec) {
    try {
        if (spec.kind == "quadratic") {
            return random_quadratic(spec.losses, spec.dim, spec.noise, spec.gen_seed);
        }
        if (spec.kind == "quadratic_shared") {
            return shared_optimum_quadratic(spec.losses, spec.dim, spec.noise, spec.gen_seed);
        }
        if (spec.kind == "mixed_norm") {
            std::mt19937_64 gen(spec.gen_seed);
            std::uniform_real_distribution<double> entry(-1.0, 1.0);
            const std::size_t rows = 2 * spec.dim;
            Matrix design(rows, spec.dim);
            for (std::size_t r = 0; r < rows; ++r) {
                for (std::size_t c = 0; c < spec.dim; ++c) design(r, c) = entry(gen);
            }
            std::vector<double> point(spec.dim);
            for (double& v : point) v = entry(gen);
            std::vector<double> targets = design.residual(point, std::vector<double>(rows, 0.0));
            return std::make_shared<MixedNormRegression>(std::move(design), std::move(targets),
                                                         spec.noise, std::move(point));
        }
        if (spec.kind == "image_fit") {
            GrayImage tgt = spec.target.empty() ? procedural_target(spec.width, spec.height)
                                                : load_pgm(spec.target);
            return std::make_shared<ImageFitProblem>(std::move(tgt));
        }
        if (spec.kind == "stream") {
            std::mt19937_64 gen(spec.gen_seed);
            std::uniform_real_distribution<double> mag(-1.0, 1.0);
            std::vector<double> bases(spec.losses);
            for (double& b : bases) b = std::exp(mag(gen) * std::log(10.0));
            return std::make_shared<StreamProblem>(std::move(bases), spec.trend, spec.noise);
        }
        if (spec.kind == "multiscale") {
            if (spec.base == "quadratic") {
                const std::size_t families = spec.losses;
                const std::size_t designated =
                    spec.designated < 0 ? families - 1 : static_cast<std::size_t>(spec.designated);
                return multiscale_quadratic(families, spec.scales, spec.sides, spec.dim,
                                            designated, spec.noise, spec.gen_seed);
            }
            if (spec.base == "image") {
                GrayImage tgt = spec.target.empty() ? procedural_target(spec.width, spec.height)
                                                    : load_pgm(spec.target);
                const std::size_t designated =
                    spec.designated < 0 ? 1 : static_cast<std::size_t>(spec.designated);
                return std::make_shared<MultiscaleImageFit>(std::move(tgt), spec.scales,
                                                            spec.sides, designated);
            }
            throw ConfigError("problem.base: unknown value '" + spec.base +
                              "', valid: quadratic image");
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError("problem: " + std::string(e.what()));
    }
    std::string msg = "problem.kind: unknown value '" + spec.kind + "', valid:";
    for (const auto& n : problem_catalog()) msg += " " + n;
    throw ConfigError(msg);
}

inline Optimizer make_optimizer(const OptimizerSpec& spec) {
    try {
        if (spec.kind == "sgd") return Optimizer::sgd(spec.lr, spec.momentum);
        if (spec.kind == "adam") {
            return Optimizer::adam(spec.lr, spec.beta1, spec.beta2, spec.epsilon);
        }
    } catch (const std::exception& e) {
        throw ConfigError("optimizer: " + std::string(e.what()));
    }
    throw ConfigError("optimizer.kind: unknown value '" + spec.kind + "', valid: sgd adam");
}

inline std::unique_ptr<WeightingStrategy> make_strategy(const StrategySpec& spec,
                                                        std::size_t loss_count,
                                                        const OptimizerSpec& optimizer) {
    try {
        if (spec.kind == "equal") return std::make_unique<EqualStrategy>(loss_count);
        if (spec.kind == "static") {
            std::vector<double> raw = spec.fixed_weights;
            if (raw.empty()) raw.assign(loss_count, 1.0);
            if (raw.size() != loss_count) {
                throw ConfigError("strategy.weights: expected " + std::to_string(loss_count) +
                                  " entries, got " + std::to_string(raw.size()));
            }
            return std::make_unique<StaticStrategy>(raw);
        }
        if (spec.kind == "cov") {
            return std::make_unique<CovStrategy>(loss_count, spec.variant, spec.decay);
        }
        if (spec.kind == "uncertainty") {
            return std::make_unique<UncertaintyStrategy>(loss_count, make_optimizer(optimizer));
        }
        if (spec.kind == "gradnorm") {
            return std::make_unique<GradNormStrategy>(spec.temperature);
        }
        if (spec.kind == "mgda") return std::make_unique<MgdaStrategy>();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError("strategy: " + std::string(e.what()));
    }
    std::string msg = "strategy.kind: unknown value '" + spec.kind + "', valid:";
    for (const auto& n : strategy_catalog()) msg += " " + n;
    throw ConfigError(msg);
}

}  // namespace covbalance
