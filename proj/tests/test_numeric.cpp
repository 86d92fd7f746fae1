#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "poissonlab/numeric.hpp"

using namespace poissonlab;

TEST_CASE("adaptive quadrature on closed forms") {
    auto poly = [](double x) { return 3.0 * x * x - 2.0 * x + 1.0; };
    REQUIRE(std::abs(quad::integrate(poly, 0.0, 2.0) - (8.0 - 4.0 + 2.0)) < 1e-10);

    auto osc = [](double x) { return std::cos(7.0 * x); };
    REQUIRE(std::abs(quad::integrate(osc, 0.0, 3.0) - std::sin(21.0) / 7.0) < 1e-9);

    // jump discontinuity without a declared breakpoint still converges
    auto jump = [](double x) { return x < 0.7 ? 1.0 : 3.0; };
    REQUIRE(std::abs(quad::integrate(jump, 0.0, 1.0) - (0.7 + 0.9)) < 1e-8);

    // declared breakpoint makes it exact
    const double brk[] = {0.7};
    REQUIRE(std::abs(quad::integrate(jump, 0.0, 1.0, 1e-12, brk) - 1.6) < 1e-12);

    REQUIRE(quad::integrate(poly, 1.0, 1.0) == 0.0);
    REQUIRE_THROWS_AS(quad::integrate(poly, 2.0, 1.0), std::invalid_argument);
    REQUIRE_THROWS_AS(quad::integrate([](double x) { return 1.0 / (x - 0.5); }, 0.4, 0.6),
                      NumericFailure);
}

TEST_CASE("complex quadrature splits into parts") {
    auto f = [](double x) { return std::complex<double>(std::cos(x), std::sin(x)); };
    const auto v = quad::integrate_complex(f, 0.0, 1.0);
    REQUIRE(std::abs(v.real() - std::sin(1.0)) < 1e-9);
    REQUIRE(std::abs(v.imag() - (1.0 - std::cos(1.0))) < 1e-9);
}

TEST_CASE("monotone bisection") {
    auto g = [](double x) { return x * x * x; };
    REQUIRE(std::abs(bisect_monotone(g, 0.0, 2.0, 0.125) - 0.5) < 1e-11);
    REQUIRE_THROWS_AS(bisect_monotone(g, 0.0, 1.0, 9.0), std::invalid_argument);
}

TEST_CASE("level crossings located by scan plus bisection") {
    auto f = [](double x) { return std::sin(x); };
    const auto cr = level_crossings(f, 0.1, 7.0, 0.5);
    REQUIRE(cr.size() == 3);  // asin(.5), pi - asin(.5), 2pi + asin(.5)
    REQUIRE(std::abs(cr[0] - std::asin(0.5)) < 1e-9);
    REQUIRE(std::abs(cr[1] - (M_PI - std::asin(0.5))) < 1e-9);
}

TEST_CASE("running moments match direct formulas") {
    const std::vector<double> xs{1.5, -0.3, 2.2, 0.0, 4.1, -1.7, 3.3, 0.9};
    RunningMoments rm;
    for (double x : xs) rm.add(x);

    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= xs.size();
    double m2 = 0.0, m4 = 0.0;
    for (double x : xs) {
        m2 += (x - mean) * (x - mean);
        m4 += std::pow(x - mean, 4);
    }
    REQUIRE(std::abs(rm.mean() - mean) < 1e-12);
    REQUIRE(std::abs(rm.variance() - m2 / (xs.size() - 1)) < 1e-12);
    const double se_var = std::sqrt((m4 / xs.size() - std::pow(m2 / xs.size(), 2)) / xs.size());
    REQUIRE(std::abs(rm.se_variance() - se_var) < 1e-12);
}

TEST_CASE("inverse-square tail sum vs brute force") {
    for (int k : {0, 1, 5, 20, 100}) {
        double brute = 0.0;
        for (int j = k + 1; j <= 20000000; ++j) brute += 1.0 / (static_cast<double>(j) * j);
        brute += 1.0 / 20000000.0;  // integral remainder of the brute cutoff
        REQUIRE(std::abs(tail_inv_square_sum(k) - brute) < 1e-8);
    }
}
