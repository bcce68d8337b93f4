#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "covbalance/cov_weighting.hpp"

using namespace covbalance;

namespace {

std::vector<std::vector<double>> run_trace(const std::vector<std::vector<double>>& streams,
                                           CovVariant variant,
                                           DecaySpec decay = DecaySpec::full_history()) {
    CovState state(streams.size(), variant, decay);
    const std::size_t steps = streams.front().size();
    std::vector<std::vector<double>> out;
    for (std::size_t t = 0; t < steps; ++t) {
        std::vector<double> losses;
        for (const auto& s : streams) losses.push_back(s[t]);
        out.push_back(cov_observe(state, losses).weights);
    }
    return out;
}

// Two-loss streams exercised against a step-by-step reference computation.
const std::vector<std::vector<double>> kStreams = {{10.0, 8.0, 9.0, 7.5, 8.2},
                                                   {1.0, 1.2, 0.9, 1.1, 1.05}};

}  // namespace

TEST_CASE("two-loss hand trace: default variant") {
    const auto trace = run_trace(kStreams, CovVariant::RatioCov);

    // Step 1 emits the uniform fallback; the ratio statistics carry no
    // spread yet.
    CHECK(trace[0][0] == 0.5);
    CHECK(trace[0][1] == 0.5);

    // Step 2: ratios 0.8 and 1.2 give dispersion scores 1/9 and 1/11,
    // normalizing to 11/20 and 9/20.
    CHECK(trace[1][0] == Catch::Approx(0.55).margin(1e-12));
    CHECK(trace[1][1] == Catch::Approx(0.45).margin(1e-12));

    // Later steps frozen from the reference trace.
    CHECK(trace[2][0] == Catch::Approx(0.39457326223168337).margin(1e-12));
    CHECK(trace[3][0] == Catch::Approx(0.43047762900645492).margin(1e-12));
    CHECK(trace[4][0] == Catch::Approx(0.43170355906707908).margin(1e-12));
}

TEST_CASE("two-loss hand trace: remaining variants") {
    const auto loss_cov = run_trace(kStreams, CovVariant::LossCov);
    CHECK(loss_cov[0][0] == 0.5);
    CHECK(loss_cov[1][0] == Catch::Approx(0.55).margin(1e-12));
    CHECK(loss_cov[2][0] == Catch::Approx(0.42910624174686407).margin(1e-12));
    CHECK(loss_cov[4][0] == Catch::Approx(0.51838888310544085).margin(1e-12));

    const auto ratio_inv = run_trace(kStreams, CovVariant::RatioInverse);
    CHECK(ratio_inv[0][0] == 0.5);
    CHECK(ratio_inv[1][0] == Catch::Approx(0.45).margin(1e-12));
    CHECK(ratio_inv[2][0] == Catch::Approx(0.60542673776831668).margin(1e-12));
    CHECK(ratio_inv[4][0] == Catch::Approx(0.56829644093292087).margin(1e-12));

    const auto loss_inv = run_trace(kStreams, CovVariant::LossInverse);
    CHECK(loss_inv[0][0] == 0.5);
    CHECK(loss_inv[1][0] == Catch::Approx(0.45).margin(1e-12));
    CHECK(loss_inv[2][0] == Catch::Approx(0.57089375825313604).margin(1e-12));
    CHECK(loss_inv[4][0] == Catch::Approx(0.48161111689455915).margin(1e-12));
}

TEST_CASE("decaying statistics follow the fixed-factor reference") {
    const auto trace = run_trace(kStreams, CovVariant::RatioCov, DecaySpec::fixed_factor(20.0));
    CHECK(trace[0][0] == 0.5);
    CHECK(trace[2][0] == Catch::Approx(0.48487744689854062).margin(1e-12));
    CHECK(trace[4][0] == Catch::Approx(0.58939426802445261).margin(1e-12));
}

TEST_CASE("constant streams fall back to equal weights at every step") {
    CovState state(3, CovVariant::RatioCov);
    for (int t = 0; t < 100; ++t) {
        const auto w = cov_observe(state, std::vector<double>{4.0, 0.5, 7.0});
        for (std::size_t i = 0; i < 3; ++i) CHECK(w[i] == 1.0 / 3.0);
    }
}

TEST_CASE("ratio variants are invariant to per-stream scaling") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> value(0.5, 2.0);
    std::vector<std::vector<double>> streams(2, std::vector<double>(200));
    for (auto& s : streams) {
        for (double& x : s) x = value(rng);
    }
    for (CovVariant v : {CovVariant::RatioCov, CovVariant::RatioInverse}) {
        for (double c : {1e-6, 1e3}) {
            auto scaled = streams;
            for (double& x : scaled[0]) x *= c;
            const auto base = run_trace(streams, v);
            const auto big = run_trace(scaled, v);
            for (std::size_t t = 0; t < base.size(); ++t) {
                CHECK(std::abs(base[t][0] - big[t][0]) < 1e-9);
                CHECK(std::abs(base[t][1] - big[t][1]) < 1e-9);
            }
        }
    }
}

TEST_CASE("loss-statistics dispersion is also scale invariant") {
    // sigma_L / mu_L is a coefficient of variation, so scaling one stream
    // by c > 0 cancels.
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> value(1.0, 3.0);
    std::vector<std::vector<double>> streams(3, std::vector<double>(150));
    for (auto& s : streams) {
        for (double& x : s) x = value(rng);
    }
    auto scaled = streams;
    for (double& x : scaled[1]) x *= 1e3;
    const auto base = run_trace(streams, CovVariant::LossCov);
    const auto big = run_trace(scaled, CovVariant::LossCov);
    for (std::size_t t = 0; t < base.size(); ++t) {
        for (std::size_t i = 0; i < 3; ++i) {
            CHECK(std::abs(base[t][i] - big[t][i]) < 1e-9);
        }
    }
}

TEST_CASE("weights stay normalized and non-negative under fuzzing") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> value(0.0, 5.0);
    for (CovVariant v : {CovVariant::RatioCov, CovVariant::LossCov, CovVariant::RatioInverse,
                         CovVariant::LossInverse}) {
        CovState state(4, v);
        for (int t = 0; t < 2000; ++t) {
            std::vector<double> losses(4);
            for (double& x : losses) x = value(rng);
            const auto w = cov_observe(state, losses);
            REQUIRE(w.normalized);
            double sum = 0.0;
            for (std::size_t i = 0; i < w.size(); ++i) {
                REQUIRE(w[i] >= 0.0);
                sum += w[i];
            }
            REQUIRE(std::abs(sum - 1.0) < 1e-9);
        }
    }
}

TEST_CASE("zero running mean maps the ratio to one") {
    // First loss zero: at step 2 the running mean is 0, so the ratio is
    // pinned at 1 regardless of the new value, same as stream B's constant
    // ratio; both dispersion scores stay zero and the fallback holds.
    CovState state(2, CovVariant::RatioCov);
    cov_observe(state, std::vector<double>{0.0, 1.0});
    const auto w = cov_observe(state, std::vector<double>{5.0, 1.0});
    CHECK(w[0] == 0.5);
    CHECK(w[1] == 0.5);
    // The loss statistics did absorb the jump from 0 to 5.
    CHECK(state.loss_stats[0].mean() == Catch::Approx(2.5));
}

TEST_CASE("step one emits equal weights for every variant") {
    for (CovVariant v : {CovVariant::RatioCov, CovVariant::LossCov, CovVariant::RatioInverse,
                         CovVariant::LossInverse}) {
        CovState state(4, v);
        const auto w = cov_observe(state, std::vector<double>{1.0, 2.0, 3.0, 4.0});
        for (std::size_t i = 0; i < 4; ++i) CHECK(w[i] == 0.25);
    }
}

TEST_CASE("input validation") {
    CovState state(2, CovVariant::RatioCov);
    CHECK_THROWS_AS(cov_observe(state, std::vector<double>{1.0}), std::invalid_argument);
    CHECK_THROWS_AS(cov_observe(state, std::vector<double>{1.0, -0.5}), std::invalid_argument);
    CHECK_THROWS_AS(cov_observe(state, std::vector<double>{1.0, std::nan("")}),
                    std::invalid_argument);
    CHECK_THROWS_AS(CovState(0, CovVariant::RatioCov), std::invalid_argument);
    // Rejected observations leave the statistics untouched.
    CHECK(state.step_count() == 0);
}

TEST_CASE("loss and ratio statistics advance together") {
    CovState state(2, CovVariant::RatioCov);
    cov_observe(state, std::vector<double>{1.0, 2.0});
    cov_observe(state, std::vector<double>{2.0, 3.0});
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(state.loss_stats[i].count() == state.ratio_stats[i].count());
    }
    CHECK(state.step_count() == 2);
}
