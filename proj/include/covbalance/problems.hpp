#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "covbalance/linalg.hpp"
#include "covbalance/pgm.hpp"
#include "covbalance/ssim.hpp"
#include "covbalance/weights.hpp"

namespace covbalance {

/// A differentiable multi-loss objective. Instances are immutable after
/// construction; evaluate draws noise only from the rng passed in, so one
/// problem object can serve concurrent runs that each own an rng.
class Problem {
  public:
    virtual ~Problem() = default;

    virtual std::size_t parameter_dim() const = 0;
    virtual std::size_t loss_count() const = 0;
    virtual std::vector<std::string> loss_names() const = 0;
    virtual bool has_gradients() const = 0;

    /// Shared minimizer of all losses, when one exists by construction.
    virtual std::optional<std::vector<double>> optimum() const { return std::nullopt; }

    /// Resolution tag per loss (0 = full scale); composites override.
    virtual std::vector<int> loss_scales() const {
        return std::vector<int>(loss_count(), 0);
    }

    virtual std::vector<double> initial_params(std::mt19937_64& rng) const {
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        std::vector<double> x(parameter_dim());
        for (double& v : x) v = u(rng);
        return x;
    }

    /// Losses and (when supported) gradients at `params`. `step` starts at 1.
    virtual LossObservation evaluate(std::span<const double> params, std::uint64_t step,
                                     std::mt19937_64& rng) const = 0;

  protected:
    void check_params(std::span<const double> params) const {
        if (params.size() != parameter_dim()) {
            throw std::invalid_argument("Problem::evaluate: parameter size mismatch");
        }
    }
};

/// One quadratic term |A x - b|^2 with optional value noise and a fixed
/// multiplier on the whole term (used by the multiscale composite).
struct QuadraticSpec {
    Matrix a;
    std::vector<double> b;
    double noise = 0.0;   // adds uniform [0, noise) to the loss value only
    double factor = 1.0;  // multiplies value and gradient alike
    int scale = 0;        // resolution tag for per-scale aggregation
    std::string name;
};

/// Sum-of-squares losses L_i(x) = factor_i * |A_i x - b_i|^2 (+ noise).
/// Gradients 2 * factor_i * A_i^T (A_i x - b_i) are exact; noise perturbs
/// values only.
class QuadraticProblem : public Problem {
  public:
    explicit QuadraticProblem(std::vector<QuadraticSpec> specs,
                              std::optional<std::vector<double>> shared_optimum = std::nullopt)
        : specs_(std::move(specs)), optimum_(std::move(shared_optimum)) {
        if (specs_.empty()) {
            throw std::invalid_argument("QuadraticProblem: need at least one loss");
        }
        dim_ = specs_.front().a.cols();
        for (std::size_t i = 0; i < specs_.size(); ++i) {
            auto& s = specs_[i];
            if (s.a.cols() != dim_ || s.b.size() != s.a.rows()) {
                throw std::invalid_argument("QuadraticProblem: dimension mismatch");
            }
            if (s.noise < 0.0 || !(s.factor > 0.0)) {
                throw std::invalid_argument("QuadraticProblem: bad noise or factor");
            }
            if (s.name.empty()) s.name = "q" + std::to_string(i);
        }
        if (optimum_ && optimum_->size() != dim_) {
            throw std::invalid_argument("QuadraticProblem: optimum dimension mismatch");
        }
    }

    std::size_t parameter_dim() const override { return dim_; }
    std::size_t loss_count() const override { return specs_.size(); }
    bool has_gradients() const override { return true; }
    std::optional<std::vector<double>> optimum() const override { return optimum_; }

    std::vector<std::string> loss_names() const override {
        std::vector<std::string> names;
        names.reserve(specs_.size());
        for (const auto& s : specs_) names.push_back(s.name);
        return names;
    }

    std::vector<int> loss_scales() const override {
        std::vector<int> scales;
        scales.reserve(specs_.size());
        for (const auto& s : specs_) scales.push_back(s.scale);
        return scales;
    }

    LossObservation evaluate(std::span<const double> params, std::uint64_t step,
                             std::mt19937_64& rng) const override {
        check_params(params);
        const std::vector<double> x(params.begin(), params.end());
        LossObservation obs;
        obs.step = step;
        obs.gradients.emplace();
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (const auto& s : specs_) {
            const std::vector<double> r = s.a.residual(x, s.b);
            double value = s.factor * squared_norm(r);
            if (s.noise > 0.0) value += s.noise * u(rng);
            std::vector<double> g = s.a.transpose_apply(r);
            for (double& v : g) v *= 2.0 * s.factor;
            obs.losses.push_back(value);
            obs.gradients->push_back(std::move(g));
        }
        return obs;
    }

  private:
    std::vector<QuadraticSpec> specs_;
    std::optional<std::vector<double>> optimum_;
    std::size_t dim_ = 0;
};

/// Two heterogeneous losses over the same linear model: mean squared error
/// and a mean Huber loss (delta = 1). Fresh target noise is drawn each step,
/// so the losses are stochastic even at a fixed parameter point.
class MixedNormRegression : public Problem {
  public:
    MixedNormRegression(Matrix design, std::vector<double> targets, double noise,
                        std::optional<std::vector<double>> known_optimum = std::nullopt)
        : design_(std::move(design)),
          targets_(std::move(targets)),
          noise_(noise),
          optimum_(std::move(known_optimum)) {
        if (targets_.size() != design_.rows()) {
            throw std::invalid_argument("MixedNormRegression: dimension mismatch");
        }
        if (noise_ < 0.0) {
            throw std::invalid_argument("MixedNormRegression: negative noise");
        }
        if (optimum_ && optimum_->size() != design_.cols()) {
            throw std::invalid_argument("MixedNormRegression: optimum dimension mismatch");
        }
    }

    std::size_t parameter_dim() const override { return design_.cols(); }
    std::size_t loss_count() const override { return 2; }
    bool has_gradients() const override { return true; }
    std::optional<std::vector<double>> optimum() const override { return optimum_; }
    std::vector<std::string> loss_names() const override { return {"l2", "huber"}; }

    LossObservation evaluate(std::span<const double> params, std::uint64_t step,
                             std::mt19937_64& rng) const override {
        check_params(params);
        const std::vector<double> x(params.begin(), params.end());
        std::vector<double> y = targets_;
        if (noise_ > 0.0) {
            std::uniform_real_distribution<double> u(-noise_, noise_);
            for (double& v : y) v += u(rng);
        }
        const std::vector<double> r = design_.residual(x, y);
        const double n = static_cast<double>(r.size());

        const double l2 = squared_norm(r) / n;
        std::vector<double> g2 = design_.transpose_apply(r);
        for (double& v : g2) v *= 2.0 / n;

        double huber = 0.0;
        std::vector<double> psi(r.size());
        for (std::size_t i = 0; i < r.size(); ++i) {
            const double a = std::abs(r[i]);
            if (a <= kHuberDelta) {
                huber += 0.5 * r[i] * r[i];
                psi[i] = r[i];
            } else {
                huber += kHuberDelta * (a - 0.5 * kHuberDelta);
                psi[i] = r[i] > 0.0 ? kHuberDelta : -kHuberDelta;
            }
        }
        huber /= n;
        std::vector<double> gh = design_.transpose_apply(psi);
        for (double& v : gh) v /= n;

        LossObservation obs;
        obs.step = step;
        obs.losses = {l2, huber};
        obs.gradients.emplace();
        obs.gradients->push_back(std::move(g2));
        obs.gradients->push_back(std::move(gh));
        return obs;
    }

    static constexpr double kHuberDelta = 1.0;

  private:
    Matrix design_;
    std::vector<double> targets_;
    double noise_;
    std::optional<std::vector<double>> optimum_;
};

namespace detail {

inline void check_image_range(const GrayImage& img) {
    for (double v : img.pixels) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw std::invalid_argument("image target values must lie in [0, 1]");
        }
    }
}

}  // namespace detail

/// Fits pixels directly to a target image in [0, 1]. Parameters are the
/// flattened prediction; losses are mean absolute error and structural
/// dissimilarity (single global window).
class ImageFitProblem : public Problem {
  public:
    explicit ImageFitProblem(GrayImage target) : target_(std::move(target)) {
        if (target_.width < 8 || target_.height < 8) {
            throw std::invalid_argument("ImageFitProblem: target must be at least 8x8");
        }
        detail::check_image_range(target_);
    }

    std::size_t parameter_dim() const override { return target_.size(); }
    std::size_t loss_count() const override { return 2; }
    bool has_gradients() const override { return true; }
    std::optional<std::vector<double>> optimum() const override { return target_.pixels; }
    std::vector<std::string> loss_names() const override { return {"l1", "dssim"}; }

    std::vector<double> initial_params(std::mt19937_64& rng) const override {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        std::vector<double> x(parameter_dim());
        for (double& v : x) v = u(rng);
        return x;
    }

    LossObservation evaluate(std::span<const double> params, std::uint64_t step,
                             std::mt19937_64&) const override {
        check_params(params);
        const std::vector<double> pred(params.begin(), params.end());
        const double n = static_cast<double>(pred.size());

        double l1 = 0.0;
        std::vector<double> g1(pred.size());
        for (std::size_t i = 0; i < pred.size(); ++i) {
            const double d = pred[i] - target_.pixels[i];
            l1 += std::abs(d);
            g1[i] = d > 0.0 ? 1.0 / n : (d < 0.0 ? -1.0 / n : 0.0);
        }
        l1 /= n;

        SsimResult ds = dssim_global(pred, target_.pixels);

        LossObservation obs;
        obs.step = step;
        obs.losses = {l1, ds.value};
        obs.gradients.emplace();
        obs.gradients->push_back(std::move(g1));
        obs.gradients->push_back(std::move(ds.gradient));
        return obs;
    }

  private:
    GrayImage target_;
};

/// Synthetic loss streams with no gradients: each stream decays
/// geometrically from its base value with multiplicative noise. Exercises
/// the statistics-only strategies through the full harness path.
class StreamProblem : public Problem {
  public:
    StreamProblem(std::vector<double> bases, double trend, double noise)
        : bases_(std::move(bases)), trend_(trend), noise_(noise) {
        if (bases_.empty()) {
            throw std::invalid_argument("StreamProblem: need at least one stream");
        }
        for (double b : bases_) {
            if (!(b > 0.0) || !std::isfinite(b)) {
                throw std::invalid_argument("StreamProblem: bases must be positive");
            }
        }
        if (!(trend_ > 0.0) || trend_ > 1.0) {
            throw std::invalid_argument("StreamProblem: trend must be in (0, 1]");
        }
        if (noise_ < 0.0 || noise_ >= 2.0) {
            throw std::invalid_argument("StreamProblem: noise must be in [0, 2)");
        }
    }

    std::size_t parameter_dim() const override { return 1; }
    std::size_t loss_count() const override { return bases_.size(); }
    bool has_gradients() const override { return false; }

    std::vector<std::string> loss_names() const override {
        std::vector<std::string> names;
        for (std::size_t i = 0; i < bases_.size(); ++i) names.push_back("s" + std::to_string(i));
        return names;
    }

    std::vector<double> initial_params(std::mt19937_64&) const override { return {0.0}; }

    LossObservation evaluate(std::span<const double> params, std::uint64_t step,
                             std::mt19937_64& rng) const override {
        check_params(params);
        LossObservation obs;
        obs.step = step;
        std::uniform_real_distribution<double> u(0.0, 1.0);
        const double decay = std::pow(trend_, static_cast<double>(step - 1));
        for (double b : bases_) {
            double v = b * decay;
            if (noise_ > 0.0) v *= 1.0 + noise_ * (u(rng) - 0.5);
            obs.losses.push_back(v);
        }
        return obs;
    }

  private:
    std::vector<double> bases_;
    double trend_;
    double noise_;
};

namespace detail {

/// 2x average pooling; dimensions must be even.
inline GrayImage pool_half(const GrayImage& in) {
    GrayImage out;
    out.width = in.width / 2;
    out.height = in.height / 2;
    out.pixels.resize(out.width * out.height);
    for (std::size_t r = 0; r < out.height; ++r) {
        for (std::size_t c = 0; c < out.width; ++c) {
            out.pixels[r * out.width + c] =
                0.25 * (in(2 * r, 2 * c) + in(2 * r, 2 * c + 1) + in(2 * r + 1, 2 * c) +
                        in(2 * r + 1, 2 * c + 1));
        }
    }
    return out;
}

inline GrayImage mirror_horizontal(const GrayImage& in) {
    GrayImage out = in;
    for (std::size_t r = 0; r < in.height; ++r) {
        for (std::size_t c = 0; c < in.width; ++c) {
            out.pixels[r * in.width + c] = in(r, in.width - 1 - c);
        }
    }
    return out;
}

}  // namespace detail

/// Image fit replicated across resolutions and sides: the prediction is
/// average-pooled 2x per scale and compared against the pooled target (side
/// one uses the mirrored target). The designated loss family carries a
/// 1/2^s multiplier at scale s; pooling gradients distribute 1/4 per level.
class MultiscaleImageFit : public Problem {
  public:
    MultiscaleImageFit(GrayImage target, std::size_t scale_count, std::size_t side_count,
                       std::size_t designated_family)
        : width_(target.width), height_(target.height), scale_count_(scale_count) {
        if (scale_count_ == 0 || side_count == 0 || side_count > 2) {
            throw std::invalid_argument("MultiscaleImageFit: bad scale or side count");
        }
        if (designated_family >= kFamilies) {
            throw std::invalid_argument("MultiscaleImageFit: designated family out of range");
        }
        designated_ = designated_family;
        if (target.width < 8 || target.height < 8) {
            throw std::invalid_argument("MultiscaleImageFit: target must be at least 8x8");
        }
        detail::check_image_range(target);
        const std::size_t div = std::size_t{1} << (scale_count_ - 1);
        if (target.width % div != 0 || target.height % div != 0) {
            throw std::invalid_argument(
                "MultiscaleImageFit: dimensions must divide by 2^(scales-1)");
        }
        targets_.resize(side_count);
        targets_[0].push_back(target);
        if (side_count == 2) targets_[1].push_back(detail::mirror_horizontal(target));
        for (std::size_t s = 1; s < scale_count_; ++s) {
            for (auto& side : targets_) side.push_back(detail::pool_half(side[s - 1]));
        }
    }

    std::size_t parameter_dim() const override { return width_ * height_; }
    std::size_t loss_count() const override {
        return scale_count_ * targets_.size() * kFamilies;
    }
    bool has_gradients() const override { return true; }
    std::optional<std::vector<double>> optimum() const override { return targets_[0][0].pixels; }

    std::vector<std::string> loss_names() const override {
        std::vector<std::string> names;
        for (std::size_t s = 0; s < scale_count_; ++s) {
            for (std::size_t side = 0; side < targets_.size(); ++side) {
                for (std::size_t f = 0; f < kFamilies; ++f) {
                    names.push_back(std::string(kFamilyNames[f]) + "_s" + std::to_string(s) +
                                    (side == 0 ? "_l" : "_r"));
                }
            }
        }
        return names;
    }

    std::vector<int> loss_scales() const override {
        std::vector<int> scales;
        for (std::size_t s = 0; s < scale_count_; ++s) {
            for (std::size_t side = 0; side < targets_.size(); ++side) {
                for (std::size_t f = 0; f < kFamilies; ++f) scales.push_back(static_cast<int>(s));
            }
        }
        return scales;
    }

    std::vector<double> initial_params(std::mt19937_64& rng) const override {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        std::vector<double> x(parameter_dim());
        for (double& v : x) v = u(rng);
        return x;
    }

    LossObservation evaluate(std::span<const double> params, std::uint64_t step,
                             std::mt19937_64&) const override {
        check_params(params);
        LossObservation obs;
        obs.step = step;
        obs.gradients.emplace();

        GrayImage pred;
        pred.width = width_;
        pred.height = height_;
        pred.pixels.assign(params.begin(), params.end());

        for (std::size_t s = 0; s < scale_count_; ++s) {
            if (s > 0) pred = detail::pool_half(pred);
            const double pool_weight = std::pow(0.25, static_cast<double>(s));
            for (std::size_t side = 0; side < targets_.size(); ++side) {
                const GrayImage& tgt = targets_[side][s];
                const double n = static_cast<double>(pred.size());

                double l1 = 0.0;
                std::vector<double> gl1(pred.size());
                for (std::size_t i = 0; i < pred.size(); ++i) {
                    const double d = pred.pixels[i] - tgt.pixels[i];
                    l1 += std::abs(d);
                    gl1[i] = d > 0.0 ? 1.0 / n : (d < 0.0 ? -1.0 / n : 0.0);
                }
                l1 /= n;
                SsimResult ds = dssim_global(pred.pixels, tgt.pixels);

                const double values[kFamilies] = {l1, ds.value};
                const std::vector<double>* grads[kFamilies] = {&gl1, &ds.gradient};
                for (std::size_t f = 0; f < kFamilies; ++f) {
                    const double factor =
                        f == designated_ ? std::pow(0.5, static_cast<double>(s)) : 1.0;
                    obs.losses.push_back(factor * values[f]);
                    obs.gradients->push_back(
                        lift_gradient(*grads[f], s, factor * pool_weight, pred.width));
                }
            }
        }
        return obs;
    }

  private:
    // Chain rule through s pooling levels: every full-resolution pixel feeds
    // exactly one pooled cell with weight 1/4^s (folded into `scale`).
    std::vector<double> lift_gradient(const std::vector<double>& pooled, std::size_t s,
                                      double scale, std::size_t pooled_width) const {
        std::vector<double> full(width_ * height_);
        const std::size_t shift = s;
        for (std::size_t r = 0; r < height_; ++r) {
            for (std::size_t c = 0; c < width_; ++c) {
                const std::size_t pr = r >> shift;
                const std::size_t pc = c >> shift;
                full[r * width_ + c] = scale * pooled[pr * pooled_width + pc];
            }
        }
        return full;
    }

    static constexpr std::size_t kFamilies = 2;
    static constexpr const char* kFamilyNames[kFamilies] = {"l1", "dssim"};

    std::size_t width_;
    std::size_t height_;
    std::size_t scale_count_;
    std::size_t designated_;
    std::vector<std::vector<GrayImage>> targets_;  // [side][scale]
};

/// Smooth procedural target for image problems when no file is supplied.
inline GrayImage procedural_target(std::size_t width, std::size_t height) {
    GrayImage img;
    img.width = width;
    img.height = height;
    img.pixels.resize(width * height);
    const double pi = 3.14159265358979323846;
    for (std::size_t r = 0; r < height; ++r) {
        for (std::size_t c = 0; c < width; ++c) {
            double v = 0.5 + 0.25 * std::sin(2.0 * pi * static_cast<double>(r) / height) +
                       0.25 * std::cos(2.0 * pi * static_cast<double>(c) / width);
            img.pixels[r * width + c] = std::min(1.0, std::max(0.0, v));
        }
    }
    return img;
}

/// Quadratics with a common minimizer x*: b_i = A_i x*, so every loss
/// vanishes at x* and convergence there is checkable.
inline std::shared_ptr<Problem> shared_optimum_quadratic(std::size_t loss_n, std::size_t dim,
                                                         double noise, std::uint64_t gen_seed) {
    if (loss_n == 0 || dim == 0) {
        throw std::invalid_argument("shared_optimum_quadratic: zero size");
    }
    std::mt19937_64 gen(gen_seed);
    std::uniform_real_distribution<double> diag(0.6, 1.4);
    std::uniform_real_distribution<double> point(-1.0, 1.0);
    std::vector<double> opt(dim);
    for (double& v : opt) v = point(gen);

    std::vector<QuadraticSpec> specs;
    for (std::size_t i = 0; i < loss_n; ++i) {
        QuadraticSpec s;
        s.a = Matrix(dim, dim);
        for (std::size_t j = 0; j < dim; ++j) s.a(j, j) = diag(gen);
        s.b = s.a.residual(opt, std::vector<double>(dim, 0.0));
        s.noise = noise;
        specs.push_back(std::move(s));
    }
    return std::make_shared<QuadraticProblem>(std::move(specs), opt);
}

/// Quadratics with independent random minimizers; genuinely conflicting.
inline std::shared_ptr<Problem> random_quadratic(std::size_t loss_n, std::size_t dim,
                                                 double noise, std::uint64_t gen_seed) {
    if (loss_n == 0 || dim == 0) {
        throw std::invalid_argument("random_quadratic: zero size");
    }
    std::mt19937_64 gen(gen_seed);
    std::uniform_real_distribution<double> diag(0.6, 1.4);
    std::uniform_real_distribution<double> offset(-1.0, 1.0);
    std::vector<QuadraticSpec> specs;
    for (std::size_t i = 0; i < loss_n; ++i) {
        QuadraticSpec s;
        s.a = Matrix(dim, dim);
        for (std::size_t j = 0; j < dim; ++j) s.a(j, j) = diag(gen);
        s.b.resize(dim);
        for (double& v : s.b) v = offset(gen);
        s.noise = noise;
        specs.push_back(std::move(s));
    }
    return std::make_shared<QuadraticProblem>(std::move(specs));
}

/// The 32-loss style composite: `families` quadratic loss families replicated
/// over `scales` resolutions and `sides`, targets indexed per cell. The
/// designated family carries 1/2^s on value and gradient; per-scale value
/// noise shrinks by 1/2^s, mimicking the variance reduction of pooling.
inline std::shared_ptr<Problem> multiscale_quadratic(std::size_t families, std::size_t scales,
                                                     std::size_t sides, std::size_t dim,
                                                     std::size_t designated, double noise,
                                                     std::uint64_t gen_seed) {
    if (families == 0 || scales == 0 || sides == 0 || sides > 2 || dim == 0) {
        throw std::invalid_argument("multiscale_quadratic: bad shape");
    }
    if (designated >= families) {
        throw std::invalid_argument("multiscale_quadratic: designated family out of range");
    }
    std::mt19937_64 gen(gen_seed);
    std::uniform_real_distribution<double> diag(0.6, 1.4);
    std::uniform_real_distribution<double> offset(-1.0, 1.0);
    std::uniform_real_distribution<double> noise_mult(0.8, 1.6);

    // Shared family matrices; per-family noise amplitude. The designated
    // family gets the smallest amplitude so its attenuated coarse copies
    // stay clearly below the noisiest full-scale loss.
    std::vector<Matrix> mats;
    std::vector<double> amps;
    for (std::size_t f = 0; f < families; ++f) {
        Matrix a(dim, dim);
        for (std::size_t j = 0; j < dim; ++j) a(j, j) = diag(gen);
        mats.push_back(std::move(a));
        amps.push_back(f == designated ? 0.5 * noise : noise_mult(gen) * noise);
    }

    std::vector<QuadraticSpec> specs;
    for (std::size_t s = 0; s < scales; ++s) {
        const double att = std::pow(0.5, static_cast<double>(s));
        for (std::size_t side = 0; side < sides; ++side) {
            for (std::size_t f = 0; f < families; ++f) {
                QuadraticSpec spec;
                spec.a = mats[f];
                spec.b.resize(dim);
                for (double& v : spec.b) v = offset(gen);
                spec.noise = amps[f] * att;
                spec.factor = f == designated ? att : 1.0;
                spec.scale = static_cast<int>(s);
                spec.name = "q" + std::to_string(f) + "_s" + std::to_string(s) +
                            (side == 0 ? "_l" : "_r");
                specs.push_back(std::move(spec));
            }
        }
    }
    return std::make_shared<QuadraticProblem>(std::move(specs));
}

}  // namespace covbalance
