#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <variant>
#include <vector>

namespace covbalance {

/// First-order optimizers over a flat parameter vector. State (velocity or
/// moment estimates) is sized lazily on the first step and owned by one run.
class Optimizer {
  public:
    static Optimizer sgd(double lr, double momentum = 0.0) {
        if (!(lr > 0.0)) throw std::invalid_argument("sgd: lr must be positive");
        if (momentum < 0.0 || momentum >= 1.0) {
            throw std::invalid_argument("sgd: momentum must be in [0, 1)");
        }
        Optimizer o;
        o.state_ = Sgd{lr, momentum, {}};
        return o;
    }

    static Optimizer adam(double lr, double beta1 = 0.9, double beta2 = 0.999,
                          double epsilon = 1e-8) {
        if (!(lr > 0.0)) throw std::invalid_argument("adam: lr must be positive");
        if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) {
            throw std::invalid_argument("adam: betas must be in [0, 1)");
        }
        if (!(epsilon > 0.0)) throw std::invalid_argument("adam: epsilon must be positive");
        Optimizer o;
        o.state_ = Adam{lr, beta1, beta2, epsilon, {}, {}, 0};
        return o;
    }

    double learning_rate() const {
        if (const auto* s = std::get_if<Sgd>(&state_)) return s->lr;
        return std::get<Adam>(state_).lr;
    }

    /// In-place update. Gradient must be finite and match the parameter size.
    void step(std::vector<double>& params, std::span<const double> gradient) {
        if (gradient.size() != params.size()) {
            throw std::invalid_argument("optimizer: gradient size mismatch");
        }
        for (double g : gradient) {
            if (!std::isfinite(g)) {
                throw std::runtime_error("optimizer: non-finite gradient");
            }
        }
        if (auto* s = std::get_if<Sgd>(&state_)) {
            if (s->velocity.empty()) s->velocity.assign(params.size(), 0.0);
            for (std::size_t i = 0; i < params.size(); ++i) {
                s->velocity[i] = s->momentum * s->velocity[i] + gradient[i];
                params[i] -= s->lr * s->velocity[i];
            }
        } else {
            auto& a = std::get<Adam>(state_);
            if (a.m.empty()) {
                a.m.assign(params.size(), 0.0);
                a.v.assign(params.size(), 0.0);
            }
            a.step_count += 1;
            const double bc1 = 1.0 - std::pow(a.beta1, static_cast<double>(a.step_count));
            const double bc2 = 1.0 - std::pow(a.beta2, static_cast<double>(a.step_count));
            for (std::size_t i = 0; i < params.size(); ++i) {
                a.m[i] = a.beta1 * a.m[i] + (1.0 - a.beta1) * gradient[i];
                a.v[i] = a.beta2 * a.v[i] + (1.0 - a.beta2) * gradient[i] * gradient[i];
                const double m_hat = a.m[i] / bc1;
                const double v_hat = a.v[i] / bc2;
                params[i] -= a.lr * m_hat / (std::sqrt(v_hat) + a.epsilon);
            }
        }
    }

  private:
    struct Sgd {
        double lr;
        double momentum;
        std::vector<double> velocity;
    };
    struct Adam {
        double lr;
        double beta1;
        double beta2;
        double epsilon;
        std::vector<double> m;
        std::vector<double> v;
        std::uint64_t step_count;
    };

    Optimizer() = default;
    std::variant<Sgd, Adam> state_;
};

}  // namespace covbalance
