#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "covbalance/weights.hpp"

namespace covbalance {

/// Stopping rule for the Frank-Wolfe min-norm solve.
struct FrankWolfeOptions {
    int max_iterations = 250;
    double improvement_tolerance = 1e-10;
};

namespace detail {

inline void validate_gradients(const std::vector<std::vector<double>>& gradients) {
    if (gradients.empty()) {
        throw std::invalid_argument("mgda: need at least one gradient");
    }
    const std::size_t dim = gradients.front().size();
    if (dim == 0) {
        throw std::invalid_argument("mgda: gradients must be non-empty vectors");
    }
    for (const auto& g : gradients) {
        if (g.size() != dim) {
            throw std::invalid_argument("mgda: gradient dimensions differ");
        }
        for (double v : g) {
            if (!std::isfinite(v)) {
                throw std::invalid_argument("mgda: gradients must be finite");
            }
        }
    }
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace detail

/// Min-norm point of the segment between two gradients: the weight on g1 is
///   gamma* = clip( (g2 - g1).g2 / |g1 - g2|^2, 0, 1 ).
/// Identical gradients degenerate to equal weights.
inline WeightVector min_norm_pair(const std::vector<double>& g1, const std::vector<double>& g2) {
    detail::validate_gradients({g1, g2});
    double diff_sq = 0.0;
    double num = 0.0;
    for (std::size_t i = 0; i < g1.size(); ++i) {
        const double d = g2[i] - g1[i];
        diff_sq += d * d;
        num += d * g2[i];
    }
    if (diff_sq <= 0.0) {
        return equal_weights(2);
    }
    const double gamma = std::clamp(num / diff_sq, 0.0, 1.0);
    return WeightVector{{gamma, 1.0 - gamma}, true};
}

/// Frank-Wolfe iterations for the min-norm point of the convex hull of the
/// gradients, with an analytic line search on each pairwise segment: each
/// step shifts weight from the worst active vertex to the best vertex.
inline WeightVector mgda_frank_wolfe(const std::vector<std::vector<double>>& gradients,
                                     FrankWolfeOptions options = {}) {
    detail::validate_gradients(gradients);
    const std::size_t n = gradients.size();
    if (n == 1) return WeightVector{{1.0}, true};

    // Gram matrix of the gradients; everything below runs in weight space.
    std::vector<double> gram(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            gram[i * n + j] = gram[j * n + i] = detail::dot(gradients[i], gradients[j]);
        }
    }

    std::vector<double> alpha(n, 1.0 / static_cast<double>(n));
    std::vector<double> q(n);  // q_r = (gram * alpha)_r = <combination, g_r>
    auto refresh_q = [&] {
        for (std::size_t r = 0; r < n; ++r) {
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) s += gram[r * n + j] * alpha[j];
            q[r] = s;
        }
    };
    refresh_q();
    double objective = detail::dot(q, alpha);

    for (int iter = 0; iter < options.max_iterations; ++iter) {
        std::size_t best = 0;
        for (std::size_t r = 1; r < n; ++r) {
            if (q[r] < q[best]) best = r;
        }
        std::size_t worst = n;
        for (std::size_t r = 0; r < n; ++r) {
            if (alpha[r] > 0.0 && (worst == n || q[r] > q[worst])) worst = r;
        }
        const double gap = q[worst] - q[best];
        if (!(gap > 0.0)) break;

        const double curvature =
            gram[best * n + best] - 2.0 * gram[best * n + worst] + gram[worst * n + worst];
        double step = alpha[worst];
        if (curvature > 0.0) step = std::min(step, gap / curvature);
        if (!(step > 0.0)) break;

        alpha[best] += step;
        alpha[worst] -= step;
        if (alpha[worst] < 0.0) alpha[worst] = 0.0;
        refresh_q();
        const double next = detail::dot(q, alpha);
        const double improvement = objective - next;
        objective = next;
        if (improvement < options.improvement_tolerance) break;
    }

    for (double& a : alpha) {
        if (a < 0.0) a = 0.0;
    }
    double sum = 0.0;
    for (double a : alpha) sum += a;
    for (double& a : alpha) a /= sum;
    return WeightVector{std::move(alpha), true};
}

/// Convex-combination coefficients minimizing |sum_i alpha_i g_i| over the
/// simplex. Two losses use the closed form; three or more use Frank-Wolfe.
inline WeightVector mgda_weights(const std::vector<std::vector<double>>& gradients,
                                 FrankWolfeOptions options = {}) {
    detail::validate_gradients(gradients);
    if (gradients.size() == 1) return WeightVector{{1.0}, true};
    if (gradients.size() == 2) return min_norm_pair(gradients[0], gradients[1]);
    return mgda_frank_wolfe(gradients, options);
}

/// |sum_i alpha_i g_i|, the norm the solver minimizes; exposed for checks.
inline double combination_norm(const std::vector<std::vector<double>>& gradients,
                               const std::vector<double>& alpha) {
    if (gradients.size() != alpha.size()) {
        throw std::invalid_argument("combination_norm: one weight per gradient");
    }
    const std::size_t dim = gradients.front().size();
    double norm_sq = 0.0;
    for (std::size_t k = 0; k < dim; ++k) {
        double c = 0.0;
        for (std::size_t i = 0; i < gradients.size(); ++i) c += alpha[i] * gradients[i][k];
        norm_sq += c * c;
    }
    return std::sqrt(norm_sq);
}

}  // namespace covbalance
