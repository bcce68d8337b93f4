#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "covbalance/linalg.hpp"
#include "covbalance/pgm.hpp"
#include "covbalance/problems.hpp"
#include "covbalance/ssim.hpp"

using namespace covbalance;

namespace {

// Central differences against the analytic gradients. Problems under test
// draw no noise, so a throwaway rng per call keeps evaluations aligned.
void check_gradients_fd(const Problem& p, const std::vector<double>& x, double h, double tol) {
    std::mt19937_64 rng(0);
    const LossObservation at = p.evaluate(x, 1, rng);
    REQUIRE(at.gradients.has_value());
    std::mt19937_64 probe_rng(1);
    std::uniform_int_distribution<std::size_t> pick(0, x.size() - 1);
    const std::size_t samples = std::min<std::size_t>(x.size(), 10);
    for (std::size_t l = 0; l < p.loss_count(); ++l) {
        for (std::size_t k = 0; k < samples; ++k) {
            const std::size_t j = x.size() <= 10 ? k : pick(probe_rng);
            auto hi = x;
            auto lo = x;
            hi[j] += h;
            lo[j] -= h;
            const double fd =
                (p.evaluate(hi, 1, rng).losses[l] - p.evaluate(lo, 1, rng).losses[l]) / (2.0 * h);
            INFO("loss " << l << " coordinate " << j);
            CHECK((*at.gradients)[l][j] == Catch::Approx(fd).margin(tol));
        }
    }
}

QuadraticSpec identity_spec(std::vector<double> b) {
    QuadraticSpec s;
    s.a = Matrix(b.size(), b.size());
    for (std::size_t j = 0; j < b.size(); ++j) s.a(j, j) = 1.0;
    s.b = std::move(b);
    return s;
}

std::string write_temp(const std::string& name, const std::string& header,
                       const std::vector<unsigned char>& payload) {
    const std::string path = "/tmp/" + name;
    std::ofstream out(path, std::ios::binary);
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    out.write(reinterpret_cast<const char*>(payload.data()),
              static_cast<std::streamsize>(payload.size()));
    return path;
}

}  // namespace

TEST_CASE("matrix residual and adjoint") {
    Matrix a(2, 3);
    a(0, 0) = 1.0;
    a(0, 1) = 2.0;
    a(0, 2) = 3.0;
    a(1, 0) = 4.0;
    a(1, 1) = 5.0;
    a(1, 2) = 6.0;
    const auto r = a.residual({1.0, 1.0, 1.0}, {5.0, 10.0});
    CHECK(r == std::vector<double>{1.0, 5.0});
    const auto t = a.transpose_apply({1.0, 2.0});
    CHECK(t == std::vector<double>{9.0, 12.0, 15.0});
    CHECK(squared_norm({3.0, 4.0}) == 25.0);
    CHECK_THROWS_AS(a.residual({1.0}, {5.0, 10.0}), std::invalid_argument);
    CHECK_THROWS_AS(a.transpose_apply({1.0}), std::invalid_argument);
    CHECK_THROWS_AS(Matrix(0, 3), std::invalid_argument);
}

TEST_CASE("quadratic losses and gradients by hand") {
    // |x - b|^2 at the origin with b = (1, 2): value 5, gradient -2 b.
    QuadraticProblem p({identity_spec({1.0, 2.0})});
    std::mt19937_64 rng(0);
    const auto obs = p.evaluate(std::vector<double>{0.0, 0.0}, 1, rng);
    CHECK(obs.losses[0] == 5.0);
    CHECK((*obs.gradients)[0] == std::vector<double>{-2.0, -4.0});

    // The term multiplier scales value and gradient alike.
    auto scaled = identity_spec({1.0, 2.0});
    scaled.factor = 0.25;
    QuadraticProblem q({std::move(scaled)});
    const auto sobs = q.evaluate(std::vector<double>{0.0, 0.0}, 1, rng);
    CHECK(sobs.losses[0] == 1.25);
    CHECK((*sobs.gradients)[0] == std::vector<double>{-0.5, -1.0});
}

TEST_CASE("quadratic value noise is additive, bounded, and reproducible") {
    auto spec = identity_spec({0.0, 0.0});
    spec.noise = 0.3;
    QuadraticProblem p({std::move(spec)});
    const std::vector<double> at_opt = {0.0, 0.0};
    std::mt19937_64 a(9);
    std::mt19937_64 b(9);
    double prev = -1.0;
    bool varied = false;
    for (int t = 0; t < 50; ++t) {
        const double va = p.evaluate(at_opt, 1, a).losses[0];
        const double vb = p.evaluate(at_opt, 1, b).losses[0];
        CHECK(va == vb);  // same rng stream, same draw
        CHECK(va >= 0.0);
        CHECK(va < 0.3);
        if (prev >= 0.0 && va != prev) varied = true;
        prev = va;
    }
    CHECK(varied);
    // Gradients stay exact under value noise.
    std::mt19937_64 c(9);
    CHECK((*p.evaluate(std::vector<double>{1.0, 0.0}, 1, c).gradients)[0] ==
          std::vector<double>{2.0, 0.0});
}

TEST_CASE("shared-optimum factory zeroes every loss at the optimum") {
    const auto p = shared_optimum_quadratic(5, 4, 0.0, 123);
    REQUIRE(p->optimum().has_value());
    const auto opt = *p->optimum();
    REQUIRE(opt.size() == 4);
    std::mt19937_64 rng(0);
    const auto obs = p->evaluate(opt, 1, rng);
    for (double v : obs.losses) CHECK(v == 0.0);
    CHECK(p->loss_count() == 5);
    CHECK(p->loss_names() == std::vector<std::string>{"q0", "q1", "q2", "q3", "q4"});
    CHECK(p->has_gradients());
}

TEST_CASE("independent-minimizer factory reports no optimum") {
    const auto p = random_quadratic(3, 4, 0.0, 7);
    CHECK_FALSE(p->optimum().has_value());
    CHECK(p->loss_count() == 3);
    CHECK(p->parameter_dim() == 4);
    std::mt19937_64 rng(1);
    const auto x = p->initial_params(rng);
    for (double v : x) {
        CHECK(v >= -1.0);
        CHECK(v <= 1.0);
    }
    check_gradients_fd(*p, x, 1e-6, 1e-6);
}

TEST_CASE("mixed-norm losses by hand") {
    Matrix design(2, 2);
    design(0, 0) = design(1, 1) = 1.0;
    MixedNormRegression p(design, {0.0, 0.0}, 0.0);
    std::mt19937_64 rng(0);
    // Residual (2, 0): one sample in the linear tail, one at zero.
    const auto obs = p.evaluate(std::vector<double>{2.0, 0.0}, 1, rng);
    CHECK(obs.losses[0] == 2.0);
    CHECK(obs.losses[1] == 0.75);
    CHECK((*obs.gradients)[0] == std::vector<double>{2.0, 0.0});
    CHECK((*obs.gradients)[1] == std::vector<double>{0.5, 0.0});
    CHECK(p.loss_names() == std::vector<std::string>{"l2", "huber"});

    // Inside the quadratic bowl both losses agree up to the 1/2.
    const auto small = p.evaluate(std::vector<double>{0.5, 0.0}, 1, rng);
    CHECK(small.losses[0] == Catch::Approx(0.125).margin(1e-15));
    CHECK(small.losses[1] == Catch::Approx(0.0625).margin(1e-15));
}

TEST_CASE("mixed-norm gradients match finite differences") {
    std::mt19937_64 gen(21);
    std::uniform_real_distribution<double> entry(-1.0, 1.0);
    Matrix design(8, 3);
    for (std::size_t i = 0; i < 8; ++i) {
        for (std::size_t j = 0; j < 3; ++j) design(i, j) = entry(gen);
    }
    std::vector<double> targets(8);
    for (double& t : targets) t = entry(gen);
    MixedNormRegression p(design, targets, 0.0);
    check_gradients_fd(p, {0.4, -0.9, 1.3}, 1e-6, 1e-6);
}

TEST_CASE("mixed-norm target noise varies per step and per seed") {
    Matrix design(4, 2);
    design(0, 0) = design(1, 1) = design(2, 0) = design(3, 1) = 1.0;
    MixedNormRegression p(design, {0.5, 0.5, 0.5, 0.5}, 0.2);
    const std::vector<double> x = {0.1, 0.1};
    std::mt19937_64 rng(5);
    const double first = p.evaluate(x, 1, rng).losses[0];
    const double second = p.evaluate(x, 2, rng).losses[0];
    CHECK(first != second);
    std::mt19937_64 replay(5);
    CHECK(p.evaluate(x, 1, replay).losses[0] == first);
}

TEST_CASE("structural similarity reference values") {
    const std::vector<double> zeros(64, 0.0);
    const std::vector<double> ones(64, 1.0);
    const auto s = ssim_global(zeros, ones);
    CHECK(s.value == Catch::Approx(9.999000099990002e-05).margin(1e-18));
    const auto d = dssim_global(zeros, ones);
    CHECK(d.value == Catch::Approx(0.49995000499950004).margin(1e-15));
    // Perfect match scores 1 (dissimilarity 0) and a flat gradient.
    const auto perfect = ssim_global(ones, ones);
    CHECK(perfect.value == Catch::Approx(1.0).margin(1e-15));
    CHECK_THROWS_AS(ssim_global({}, {}), std::invalid_argument);
    CHECK_THROWS_AS(ssim_global(zeros, std::vector<double>(32, 0.0)), std::invalid_argument);
}

TEST_CASE("image fit losses vanish at the target") {
    const GrayImage target = procedural_target(8, 8);
    ImageFitProblem p(target);
    REQUIRE(p.optimum().has_value());
    CHECK(*p.optimum() == target.pixels);
    std::mt19937_64 rng(0);
    const auto obs = p.evaluate(target.pixels, 1, rng);
    CHECK(obs.losses[0] == 0.0);
    CHECK(obs.losses[1] == Catch::Approx(0.0).margin(1e-15));
    CHECK(p.loss_names() == std::vector<std::string>{"l1", "dssim"});
    // Starting pixels live in intensity range.
    const auto x0 = p.initial_params(rng);
    for (double v : x0) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("image fit gradients match finite differences") {
    const GrayImage target = procedural_target(8, 8);
    ImageFitProblem p(target);
    // Offset keeps every pixel away from the absolute-value kink.
    std::vector<double> x = target.pixels;
    for (double& v : x) v += 0.25;
    check_gradients_fd(p, x, 1e-7, 1e-6);
}

TEST_CASE("stream problem decays geometrically without gradients") {
    StreamProblem p({4.0, 1.0}, 0.5, 0.0);
    CHECK_FALSE(p.has_gradients());
    CHECK(p.parameter_dim() == 1);
    CHECK(p.loss_names() == std::vector<std::string>{"s0", "s1"});
    std::mt19937_64 rng(0);
    CHECK(p.initial_params(rng) == std::vector<double>{0.0});
    const std::vector<double> x = {0.0};
    CHECK(p.evaluate(x, 1, rng).losses == std::vector<double>{4.0, 1.0});
    CHECK(p.evaluate(x, 3, rng).losses == std::vector<double>{1.0, 0.25});
    CHECK_FALSE(p.evaluate(x, 1, rng).gradients.has_value());

    // Multiplicative noise stays within the stated band.
    StreamProblem noisy({2.0}, 1.0, 0.5);
    for (int t = 1; t <= 200; ++t) {
        const double v = noisy.evaluate(x, static_cast<std::uint64_t>(t), rng).losses[0];
        CHECK(v >= 2.0 * 0.75);
        CHECK(v <= 2.0 * 1.25);
    }
}

TEST_CASE("pooling halves each dimension by averaging quads") {
    GrayImage img;
    img.width = 4;
    img.height = 2;
    img.pixels = {0.0, 1.0, 0.5, 0.5, 1.0, 0.0, 0.5, 0.5};
    const GrayImage out = detail::pool_half(img);
    REQUIRE(out.width == 2);
    REQUIRE(out.height == 1);
    CHECK(out.pixels[0] == 0.5);
    CHECK(out.pixels[1] == 0.5);

    GrayImage asym;
    asym.width = 2;
    asym.height = 2;
    asym.pixels = {0.1, 0.2, 0.3, 0.8};
    CHECK(detail::pool_half(asym).pixels[0] == Catch::Approx(0.35).margin(1e-15));

    const GrayImage mirrored = detail::mirror_horizontal(img);
    CHECK(mirrored(0, 0) == 0.5);
    CHECK(mirrored(0, 3) == 0.0);
    CHECK(mirrored(1, 0) == 0.5);
}

TEST_CASE("multiscale image fit layout") {
    const GrayImage target = procedural_target(16, 16);
    MultiscaleImageFit p(target, 3, 2, 1);
    CHECK(p.parameter_dim() == 256);
    CHECK(p.loss_count() == 12);
    const auto names = p.loss_names();
    REQUIRE(names.size() == 12);
    CHECK(names[0] == "l1_s0_l");
    CHECK(names[1] == "dssim_s0_l");
    CHECK(names[2] == "l1_s0_r");
    CHECK(names[3] == "dssim_s0_r");
    CHECK(names[4] == "l1_s1_l");
    CHECK(names[11] == "dssim_s2_r");
    CHECK(p.loss_scales() == std::vector<int>{0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 2});
    REQUIRE(p.optimum().has_value());
    CHECK(*p.optimum() == target.pixels);

    // At the target every left-side loss vanishes; the mirrored side does not.
    std::mt19937_64 rng(0);
    const auto obs = p.evaluate(target.pixels, 1, rng);
    CHECK(obs.losses[0] == 0.0);
    CHECK(obs.losses[1] == Catch::Approx(0.0).margin(1e-15));
    CHECK(obs.losses[2] > 1e-3);
}

TEST_CASE("multiscale image fit agrees with manual pooling") {
    const GrayImage target = procedural_target(16, 16);
    const std::size_t designated = 1;  // dissimilarity family
    MultiscaleImageFit p(target, 2, 1, designated);
    std::mt19937_64 rng(3);
    std::vector<double> x = target.pixels;
    std::uniform_real_distribution<double> jitter(-0.2, 0.2);
    for (double& v : x) v += jitter(rng);

    const auto obs = p.evaluate(x, 1, rng);
    REQUIRE(obs.losses.size() == 4);

    GrayImage pred;
    pred.width = pred.height = 16;
    pred.pixels = x;
    const GrayImage pred1 = detail::pool_half(pred);
    const GrayImage tgt1 = detail::pool_half(target);

    double l1 = 0.0;
    for (std::size_t i = 0; i < pred1.size(); ++i) {
        l1 += std::abs(pred1.pixels[i] - tgt1.pixels[i]);
    }
    l1 /= static_cast<double>(pred1.size());
    const double ds = dssim_global(pred1.pixels, tgt1.pixels).value;

    CHECK(obs.losses[2] == Catch::Approx(l1).margin(1e-14));          // scale 1, family 0
    CHECK(obs.losses[3] == Catch::Approx(0.5 * ds).margin(1e-14));    // designated, halved
    CHECK(obs.losses[1] == Catch::Approx(dssim_global(x, target.pixels).value).margin(1e-14));
}

TEST_CASE("multiscale image fit gradients match finite differences") {
    const GrayImage target = procedural_target(16, 16);
    MultiscaleImageFit p(target, 3, 2, 1);
    std::vector<double> x = target.pixels;
    for (double& v : x) v += 0.25;
    check_gradients_fd(p, x, 1e-7, 1e-6);
}

TEST_CASE("multiscale image fit validation") {
    const GrayImage target = procedural_target(16, 16);
    CHECK_THROWS_AS(MultiscaleImageFit(target, 0, 2, 0), std::invalid_argument);
    CHECK_THROWS_AS(MultiscaleImageFit(target, 2, 3, 0), std::invalid_argument);
    CHECK_THROWS_AS(MultiscaleImageFit(target, 2, 2, 2), std::invalid_argument);
    // 16 does not divide by 2^5.
    CHECK_THROWS_AS(MultiscaleImageFit(target, 6, 2, 0), std::invalid_argument);
    GrayImage bad = target;
    bad.pixels[0] = 1.5;
    CHECK_THROWS_AS(MultiscaleImageFit(bad, 2, 2, 0), std::invalid_argument);
}

TEST_CASE("multiscale quadratic factory layout and attenuation") {
    const auto p = multiscale_quadratic(2, 4, 2, 6, 1, 0.5, 7);
    CHECK(p->loss_count() == 16);
    CHECK(p->parameter_dim() == 6);
    const auto names = p->loss_names();
    CHECK(names[0] == "q0_s0_l");
    CHECK(names[1] == "q1_s0_l");
    CHECK(names[2] == "q0_s0_r");
    CHECK(names[15] == "q1_s3_r");
    const auto scales = p->loss_scales();
    CHECK(scales[0] == 0);
    CHECK(scales[15] == 3);
    int coarse = 0;
    for (int s : scales) {
        if (s >= 1) ++coarse;
    }
    CHECK(coarse == 12);

    // Designated-family losses shrink with scale: average the noisy values
    // at a fixed point and compare scale 0 against scale 3.
    std::mt19937_64 rng(11);
    const std::vector<double> x(6, 0.3);
    double fine = 0.0;
    double coarse_mean = 0.0;
    for (int t = 0; t < 400; ++t) {
        const auto obs = p->evaluate(x, static_cast<std::uint64_t>(t + 1), rng);
        fine += obs.losses[1];     // q1 scale 0 left
        coarse_mean += obs.losses[13];  // q1 scale 3 left
    }
    CHECK(coarse_mean < 0.25 * fine);
    check_gradients_fd(*multiscale_quadratic(2, 3, 2, 4, 0, 0.0, 3),
                       std::vector<double>{0.2, -0.4, 0.9, 0.0}, 1e-6, 1e-6);
}

TEST_CASE("procedural target shape and range") {
    const GrayImage img = procedural_target(12, 8);
    CHECK(img.width == 12);
    CHECK(img.height == 8);
    REQUIRE(img.size() == 96);
    for (double v : img.pixels) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
    CHECK(img(0, 0) == Catch::Approx(0.75).margin(1e-15));
}

TEST_CASE("binary graymap loading") {
    std::vector<unsigned char> bytes(16);
    for (std::size_t i = 0; i < 16; ++i) bytes[i] = static_cast<unsigned char>(i * 17);
    const auto path = write_temp("cb_ok.pgm", "P5\n# a comment\n4 4\n255\n", bytes);
    const GrayImage img = load_pgm(path);
    REQUIRE(img.width == 4);
    REQUIRE(img.height == 4);
    CHECK(img.pixels[0] == 0.0);
    CHECK(img.pixels[15] == 1.0);
    CHECK(img.pixels[5] == Catch::Approx(85.0 / 255.0).margin(1e-15));
}

TEST_CASE("binary graymap loading, two-byte samples") {
    // Big-endian 16-bit: 0, 32768, 65535, 256.
    const std::vector<unsigned char> bytes = {0x00, 0x00, 0x80, 0x00, 0xFF, 0xFF, 0x01, 0x00};
    const auto path = write_temp("cb_16.pgm", "P5 2 2 65535 ", bytes);
    const GrayImage img = load_pgm(path);
    CHECK(img.pixels[0] == 0.0);
    CHECK(img.pixels[1] == Catch::Approx(32768.0 / 65535.0).margin(1e-15));
    CHECK(img.pixels[2] == 1.0);
    CHECK(img.pixels[3] == Catch::Approx(256.0 / 65535.0).margin(1e-15));
}

TEST_CASE("graymap loader rejects malformed files") {
    CHECK_THROWS_WITH(load_pgm("/tmp/cb_missing_file.pgm"),
                      Catch::Matchers::ContainsSubstring("cannot open"));
    auto path = write_temp("cb_ascii.pgm", "P2\n2 2\n255\n", {});
    CHECK_THROWS_WITH(load_pgm(path), Catch::Matchers::ContainsSubstring("P5"));
    path = write_temp("cb_trunc.pgm", "P5\n4 4\n255\n", {1, 2, 3});
    CHECK_THROWS_WITH(load_pgm(path), Catch::Matchers::ContainsSubstring("truncated"));
    path = write_temp("cb_over.pgm", "P5\n1 1\n100\n", {200});
    CHECK_THROWS_WITH(load_pgm(path), Catch::Matchers::ContainsSubstring("exceeds maxval"));
    path = write_temp("cb_zero.pgm", "P5\n0 4\n255\n", {});
    CHECK_THROWS_WITH(load_pgm(path), Catch::Matchers::ContainsSubstring("zero dimension"));
    path = write_temp("cb_maxval.pgm", "P5\n1 1\n70000\n", {0, 0});
    CHECK_THROWS_WITH(load_pgm(path), Catch::Matchers::ContainsSubstring("maxval out of range"));
}

TEST_CASE("problem input validation") {
    CHECK_THROWS_AS(QuadraticProblem({}), std::invalid_argument);
    auto bad_noise = identity_spec({1.0});
    bad_noise.noise = -0.1;
    CHECK_THROWS_AS(QuadraticProblem({bad_noise}), std::invalid_argument);
    auto bad_factor = identity_spec({1.0});
    bad_factor.factor = 0.0;
    CHECK_THROWS_AS(QuadraticProblem({bad_factor}), std::invalid_argument);

    QuadraticProblem p({identity_spec({1.0, 2.0})});
    std::mt19937_64 rng(0);
    CHECK_THROWS_AS(p.evaluate(std::vector<double>{1.0}, 1, rng), std::invalid_argument);

    Matrix design(2, 2);
    design(0, 0) = design(1, 1) = 1.0;
    CHECK_THROWS_AS(MixedNormRegression(design, {0.0}, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(MixedNormRegression(design, {0.0, 0.0}, -1.0), std::invalid_argument);

    GrayImage tiny;
    tiny.width = 4;
    tiny.height = 4;
    tiny.pixels.assign(16, 0.5);
    CHECK_THROWS_AS(ImageFitProblem(tiny), std::invalid_argument);

    CHECK_THROWS_AS(StreamProblem({}, 0.5, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(StreamProblem({-1.0}, 0.5, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(StreamProblem({1.0}, 0.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(StreamProblem({1.0}, 1.5, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(StreamProblem({1.0}, 0.5, 2.0), std::invalid_argument);

    CHECK_THROWS_AS(multiscale_quadratic(2, 4, 3, 6, 0, 0.1, 1), std::invalid_argument);
    CHECK_THROWS_AS(multiscale_quadratic(2, 4, 2, 6, 2, 0.1, 1), std::invalid_argument);
    CHECK_THROWS_AS(shared_optimum_quadratic(0, 4, 0.0, 1), std::invalid_argument);
}
