#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "poissonlab/nsmap.hpp"
#include "poissonlab/process.hpp"

using namespace poissonlab;

TEST_CASE("sampling is bit-reproducible for a fixed seed") {
    const BaseMeasure m = weighted_line();
    ConfigSampler sampler(m, Window(-1.0, 2.0));
    Stream a(99, 4), b(99, 4);
    const PointConfig ca = sampler.sample(a);
    const PointConfig cb = sampler.sample(b);
    REQUIRE(ca.points == cb.points);
}

TEST_CASE("count statistics match the Poisson law") {
    const BaseMeasure m = lebesgue();
    const double mass = std::log(2.0);
    ConfigSampler sampler(m, Window(0.0, mass));
    RunningMoments counts;
    int voids = 0;
    const int trials = 40000;
    for (int t = 0; t < trials; ++t) {
        Stream rng(7, t);
        const PointConfig cfg = sampler.sample(rng);
        counts.add(static_cast<double>(cfg.size()));
        voids += cfg.size() == 0 ? 1 : 0;
        for (double x : cfg.points) REQUIRE(cfg.window.contains(x));
    }
    REQUIRE(std::abs(counts.mean() - mass) <= 4.0 * counts.se_mean());
    REQUIRE(std::abs(counts.variance() - mass) <= 5.0 * counts.se_variance());
    const double void_emp = static_cast<double>(voids) / trials;
    const double se = std::sqrt(0.5 * 0.5 / trials);
    REQUIRE(std::abs(void_emp - 0.5) <= 4.0 * se);
}

TEST_CASE("zero-mass window yields the empty configuration") {
    const BaseMeasure pw = piecewise_constant({0.0, 1.0, 2.0}, {0.0, 1.0});
    ConfigSampler sampler(pw, Window(0.0, 1.0));
    for (int t = 0; t < 50; ++t) {
        Stream rng(11, t);
        REQUIRE(sampler.sample(rng).size() == 0);
    }
}

TEST_CASE("count over windows") {
    PointConfig cfg;
    cfg.window = Window(0.0, 1.0);
    REQUIRE(cfg.count(Window(0.0, 1.0)) == 0);
    cfg.points = {0.1, 0.5, 0.9};
    REQUIRE(cfg.count(Window(0.0, 0.6)) == 2);
    REQUIRE(cfg.count(Window(0.0, 0.6)) + cfg.count(Window(0.6, 1.0)) ==
            cfg.count(Window(0.0, 1.0)));
    REQUIRE_THROWS_AS(cfg.count(Window(0.0, 2.0)), std::invalid_argument);
}

TEST_CASE("pushforward maps points and windows") {
    const BaseMeasure m = lebesgue();
    PointConfig cfg;
    cfg.window = Window(0.0, 2.0);
    cfg.points = {0.25, 1.5};

    const NsMap id = identity_map();
    REQUIRE(pushforward(cfg, id).points == cfg.points);

    // equal-mass swap acts affinely: x -> x + 1 on [0,1)
    const NsMap sw = make_swap(Window(0.0, 1.0), Window(1.0, 2.0), m);
    const PointConfig image = pushforward(cfg, sw);
    REQUIRE(std::abs(image.points[0] - 0.5) < 1e-9);
    REQUIRE(std::abs(image.points[1] - 1.25) < 1e-9);

    // count identity: N_A(T omega) = N_{T^{-1}A}(omega)
    const Window a(1.0, 1.5);
    REQUIRE(image.count(a) == cfg.count(Window(0.0, 0.5)));

    // inversion round trip preserves the configuration
    const PointConfig back = pushforward(image, inverse_of(sw));
    REQUIRE(back.size() == cfg.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        REQUIRE(std::abs(back.points[i] - cfg.points[i]) < 1e-9);
    }
}

TEST_CASE("void probabilities and independence") {
    const BaseMeasure m = lebesgue();
    const auto rep = renyi_void_check(
        m, {Window(0.0, std::log(2.0)), Window(1.0, 2.0)}, 30000, 2026);
    REQUIRE(rep.rows.size() == 2);
    REQUIRE(std::abs(rep.rows[0].target - 0.5) < 1e-12);
    REQUIRE(std::abs(rep.rows[1].target - std::exp(-1.0)) < 1e-12);
    REQUIRE(rep.pass);
    REQUIRE(std::abs(rep.joint_target - 0.5 * std::exp(-1.0)) < 1e-12);
}
