#include <catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <random>

#include "llmrank/core.hpp"

using namespace llmrank;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

TEST_CASE("normalize_over_options: equal logprobs give the uniform distribution",
          "[core]") {
    auto scale = ScoreScale::likert();
    auto dist = normalize_over_options({-1.0, -1.0, -1.0, -1.0, -1.0}, scale);
    for (double p : dist.probs) CHECK(p == Catch::Approx(0.2).margin(1e-12));
}

TEST_CASE("normalize_over_options: -inf entries vanish (one-hot limit)", "[core]") {
    auto scale = ScoreScale::likert();
    auto dist = normalize_over_options({0.0, -kInf, -kInf, -kInf, -kInf}, scale);
    CHECK(dist.probs[0] == 1.0);
    for (std::size_t i = 1; i < 5; ++i) CHECK(dist.probs[i] == 0.0);
}

TEST_CASE("normalize_over_options: already-normalized logprobs round-trip", "[core]") {
    auto scale = ScoreScale::likert();
    std::vector<double> expected = {0.1, 0.2, 0.4, 0.2, 0.1};
    std::vector<double> logprobs;
    for (double p : expected) logprobs.push_back(std::log(p));
    auto dist = normalize_over_options(logprobs, scale);
    for (std::size_t i = 0; i < 5; ++i)
        CHECK(dist.probs[i] == Catch::Approx(expected[i]).margin(1e-12));
    validate(dist);
}

TEST_CASE("normalize_over_options: shift invariance", "[core]") {
    auto scale = ScoreScale::likert();
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> logprob(-20.0, 0.0);
    std::uniform_real_distribution<double> shift(-50.0, 50.0);
    for (int round = 0; round < 200; ++round) {
        std::vector<double> base(5);
        for (auto& lp : base) lp = logprob(rng);
        double c = shift(rng);
        std::vector<double> shifted = base;
        for (auto& lp : shifted) lp += c;
        auto a = normalize_over_options(base, scale);
        auto b = normalize_over_options(shifted, scale);
        for (std::size_t i = 0; i < 5; ++i)
            CHECK(a.probs[i] == Catch::Approx(b.probs[i]).margin(1e-9));
    }
}

TEST_CASE("normalize_over_options: permuting the input permutes the output", "[core]") {
    auto scale = ScoreScale::likert();
    std::vector<double> logprobs = {-0.3, -2.0, -1.1, -4.2, -0.9};
    std::vector<std::size_t> perm = {3, 0, 4, 1, 2};
    std::vector<double> permuted(5);
    for (std::size_t i = 0; i < 5; ++i) permuted[i] = logprobs[perm[i]];
    auto base = normalize_over_options(logprobs, scale);
    auto after = normalize_over_options(permuted, scale);
    for (std::size_t i = 0; i < 5; ++i)
        CHECK(after.probs[i] == Catch::Approx(base.probs[perm[i]]).margin(1e-12));
}

TEST_CASE("normalize_over_options: contract violations", "[core]") {
    auto scale = ScoreScale::likert();
    CHECK_THROWS_AS(normalize_over_options({-1.0, -2.0}, scale), ContractError);
    CHECK_THROWS_AS(normalize_over_options({-kInf, -kInf, -kInf, -kInf, -kInf}, scale),
                    DegenerateInputError);
    CHECK_THROWS_AS(normalize_over_options({0.0, 0.0, 0.0, 0.0, kInf}, scale),
                    ContractError);
    CHECK_THROWS_AS(
        normalize_over_options({0.0, 0.0, 0.0, 0.0, std::nan("")}, scale), ContractError);
}

TEST_CASE("score scale validation", "[core]") {
    CHECK_NOTHROW(validate(ScoreScale::likert()));
    CHECK_NOTHROW(validate(ScoreScale::integer_range(1, 100)));

    ScoreScale one;
    one.values = {1};
    one.tokens = {"1"};
    CHECK_THROWS_AS(validate(one), ContractError);

    ScoreScale unordered;
    unordered.values = {1, 3, 2};
    unordered.tokens = {"1", "3", "2"};
    CHECK_THROWS_AS(validate(unordered), ContractError);

    ScoreScale clash;
    clash.values = {1, 2};
    clash.tokens = {"x", "x"};
    CHECK_THROWS_AS(validate(clash), ContractError);

    ScoreScale mismatched;
    mismatched.values = {1, 2, 3};
    mismatched.tokens = {"1", "2"};
    CHECK_THROWS_AS(validate(mismatched), ContractError);
}

TEST_CASE("ranking validation", "[core]") {
    Ranking good{"q1", {{"d2", 3.7, 1}, {"d1", 1.2, 2}}, "test"};
    CHECK_NOTHROW(validate(good));

    Ranking gap{"q1", {{"d2", 3.7, 1}, {"d1", 1.2, 3}}, "test"};
    CHECK_THROWS_AS(validate(gap), ContractError);

    Ranking ascending{"q1", {{"d2", 1.0, 1}, {"d1", 2.0, 2}}, "test"};
    CHECK_THROWS_AS(validate(ascending), ContractError);

    Ranking duplicate{"q1", {{"d1", 2.0, 1}, {"d1", 1.0, 2}}, "test"};
    CHECK_THROWS_AS(validate(duplicate), ContractError);
}

TEST_CASE("distribution validation", "[core]") {
    CHECK_NOTHROW(validate(ScoreDistribution{{0.2, 0.2, 0.2, 0.2, 0.2}}));
    CHECK_THROWS_AS(validate(ScoreDistribution{{0.5, 0.6}}), ContractError);
    CHECK_THROWS_AS(validate(ScoreDistribution{{-0.1, 1.1}}), ContractError);
}
