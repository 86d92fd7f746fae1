#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "poissonlab/numeric.hpp"
#include "poissonlab/rng.hpp"

using namespace poissonlab;

TEST_CASE("streams are deterministic in (master, trial)") {
    Stream a(123, 7), b(123, 7), c(123, 8);
    bool any_diff = false;
    for (int i = 0; i < 64; ++i) {
        const double x = a.u01();
        REQUIRE(x == b.u01());
        REQUIRE(x >= 0.0);
        REQUIRE(x < 1.0);
        if (x != c.u01()) any_diff = true;
    }
    REQUIRE(any_diff);
}

TEST_CASE("poisson moments through both sampling branches") {
    for (double lam : {0.7, 5.0, 29.5, 30.5, 64.0}) {
        RunningMoments s;
        for (int t = 0; t < 60000; ++t) {
            Stream rng(31, t);
            s.add(static_cast<double>(rng.poisson(lam)));
        }
        REQUIRE(std::abs(s.mean() - lam) <= 5.0 * s.se_mean());
        REQUIRE(std::abs(s.variance() - lam) <= 5.0 * s.se_variance());
    }
    Stream rng(1, 1);
    REQUIRE(rng.poisson(0.0) == 0);
    REQUIRE_THROWS_AS(rng.poisson(-1.0), std::invalid_argument);
}

TEST_CASE("rejection branch matches the exact pmf") {
    const double lam = 50.0;
    const int n = 200000;
    std::vector<int> hist(160, 0);
    for (int t = 0; t < n; ++t) {
        Stream rng(77, t);
        const auto k = rng.poisson(lam);
        if (k < hist.size()) ++hist[k];
    }
    for (int k : {40, 50, 60}) {
        const double pmf = std::exp(-lam + k * std::log(lam) - std::lgamma(k + 1.0));
        const double emp = static_cast<double>(hist[k]) / n;
        const double se = std::sqrt(pmf * (1.0 - pmf) / n);
        REQUIRE(std::abs(emp - pmf) <= 5.0 * se);
    }
}

TEST_CASE("geometric-skip Bernoulli hits have binomial counts") {
    const double p = 0.01;
    const std::uint32_t len = 500;
    RunningMoments counts;
    double pos_sum = 0.0;
    std::uint64_t pos_n = 0;
    for (int t = 0; t < 40000; ++t) {
        Stream rng(55, t);
        const auto hits = rng.bernoulli_hits(len, p);
        counts.add(static_cast<double>(hits.size()));
        for (auto h : hits) {
            REQUIRE(h < len);
            pos_sum += h;
            ++pos_n;
        }
    }
    const double mean = len * p;
    REQUIRE(std::abs(counts.mean() - mean) <= 5.0 * counts.se_mean());
    REQUIRE(std::abs(counts.variance() - mean * (1.0 - p)) <= 5.0 * counts.se_variance());
    // positions uniform over the window
    const double pos_mean = pos_sum / static_cast<double>(pos_n);
    const double pos_se = (len / std::sqrt(12.0)) / std::sqrt(static_cast<double>(pos_n));
    REQUIRE(std::abs(pos_mean - (len - 1) / 2.0) <= 5.0 * pos_se);

    Stream rng(3, 3);
    REQUIRE(rng.bernoulli_hits(100, 0.0).empty());
    REQUIRE(rng.bernoulli_hits(5, 1.0).size() == 5);
}
