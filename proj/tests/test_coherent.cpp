#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "poissonlab/coherent.hpp"
#include "poissonlab/suspension.hpp"

using namespace poissonlab;

namespace {

PointConfig fixed_config(std::vector<double> pts, Window w) {
    PointConfig cfg;
    cfg.points = std::move(pts);
    cfg.window = w;
    return cfg;
}

}  // namespace

TEST_CASE("bullet product identities") {
    const BaseMeasure m = lebesgue();
    const TestFunction f = hat_fn(0.7, Window(0.0, 2.0), m);
    const TestFunction zero = indicator_fn(0.0, Window(0.0, 1.0), m);
    const TestFunction neg_ind = indicator_fn(-1.0, Window(0.0, 1.0), m);

    const TestFunction f_zero = bullet(f, zero, m);
    const TestFunction idem = bullet(neg_ind, neg_ind, m);
    for (double x : {0.1, 0.6, 1.3, 1.9, 2.5}) {
        REQUIRE(std::abs(f_zero(x) - f(x)) < 1e-12);
        REQUIRE(std::abs(idem(x) - neg_ind(x)) < 1e-12);
    }

    // (sqrt(phi)-1) . (sqrt(phi)-1) = phi - 1
    const double phi = 2.7;
    const TestFunction s = indicator_fn(std::sqrt(phi) - 1.0, Window(0.0, 1.0), m);
    const TestFunction ss = bullet(s, s, m);
    for (double x : {0.2, 0.8}) REQUIRE(std::abs(ss(x) - (phi - 1.0)) < 1e-12);
}

TEST_CASE("coherent evaluation closed forms") {
    const BaseMeasure m = lebesgue();
    const TestFunction zero = indicator_fn(0.0, Window(0.0, 1.0), m);
    const TestFunction f = indicator_fn(0.5, Window(0.0, 1.0), m);
    const TestFunction neg = indicator_fn(-1.0, Window(0.0, 1.0), m);

    const PointConfig empty = fixed_config({}, Window(-1.0, 2.0));
    const PointConfig two = fixed_config({0.25, 0.75}, Window(-1.0, 2.0));
    const PointConfig outside = fixed_config({1.5}, Window(-1.0, 2.0));

    REQUIRE(exp_eval(zero, two) == 1.0);
    REQUIRE(std::abs(exp_eval(f, empty) - std::exp(-0.5)) < 1e-12);
    REQUIRE(std::abs(exp_eval(f, two) - std::exp(-0.5) * 1.5 * 1.5) < 1e-12);
    // Exp(-1_A) = e^{mu(A)} on {N_A = 0}
    REQUIRE(std::abs(exp_eval(neg, outside) - std::exp(1.0)) < 1e-12);
    REQUIRE(exp_eval(neg, two) == 0.0);

    PointConfig small = fixed_config({}, Window(0.25, 0.75));
    REQUIRE_THROWS_AS(exp_eval(f, small), std::invalid_argument);
}

TEST_CASE("extended coherent vectors are decomposition invariant") {
    const BaseMeasure m = lebesgue();
    const TestFunction f = indicator_fn(0.4, Window(0.0, 1.5), m);
    const TestFunction g = hat_fn(-0.5, Window(0.5, 2.0), m);
    const TestFunction fg = bullet(f, g, m);
    const TestFunction zero = indicator_fn(0.0, Window(0.0, 2.0), m);

    ConfigSampler sampler(m, Window(0.0, 2.0));
    for (int t = 0; t < 50; ++t) {
        Stream rng(5, t);
        const PointConfig cfg = sampler.sample(rng);
        const double a = extended_exp_eval(f, g, cfg, m);
        const double b = extended_exp_eval(fg, zero, cfg, m);
        REQUIRE(std::abs(a - b) < 1e-10 * std::max(1.0, std::abs(a)));
        REQUIRE(std::abs(extended_exp_eval(f, zero, cfg, m) - exp_eval(f, cfg)) < 1e-12);
    }
}

TEST_CASE("extended coherent vectors have unit mean") {
    const BaseMeasure m = lebesgue();
    const TestFunction f = indicator_fn(0.4, Window(0.0, 1.0), m);
    const TestFunction g = indicator_fn(0.6, Window(0.5, 1.5), m);
    ConfigSampler sampler(m, Window(0.0, 1.5));
    RunningMoments stat;
    for (int t = 0; t < 30000; ++t) {
        Stream rng(17, t);
        stat.add(extended_exp_eval(f, g, sampler.sample(rng), m));
    }
    REQUIRE(std::abs(stat.mean() - 1.0) <= 4.0 * stat.se_mean());
}

TEST_CASE("absolute-value identity pathwise") {
    const BaseMeasure m = lebesgue();
    // phi >= -1: identity degenerates to |Exp phi| = Exp phi
    const TestFunction mild = indicator_fn(-0.5, Window(0.0, 1.0), m);
    const PointConfig cfg = fixed_config({0.3, 0.6}, Window(-0.5, 1.5));
    REQUIRE(std::abs(abs_exp_identity_check(mild, cfg, m).residual) < 1e-12);

    // phi = -2 on A: the folded profile vanishes on A, both points give |-1|
    const TestFunction deep = indicator_fn(-2.0, Window(0.0, 1.0), m);
    const AbsIdentityReport rep = abs_exp_identity_check(deep, cfg, m);
    REQUIRE(rep.residual < 1e-10);
    REQUIRE(std::abs(rep.lhs - std::exp(2.0)) < 1e-9);

    // empty configuration: both sides reduce to exponentials of integrals
    const PointConfig empty = fixed_config({}, Window(-0.5, 1.5));
    const AbsIdentityReport rep2 = abs_exp_identity_check(deep, empty, m);
    REQUIRE(rep2.residual < 1e-12);
}

TEST_CASE("exponential relation by Monte Carlo") {
    const BaseMeasure m = lebesgue();
    const TestFunction f = indicator_fn(0.3, Window(0.0, 1.0), m);
    const TestFunction g = indicator_fn(0.4, Window(0.5, 1.5), m);
    const McEstimate est = inner_product_mc(f, g, 30000, 2027, m);
    REQUIRE(std::abs(est.z()) <= 4.0);
    // g = 0 gives E[Exp f] = 1
    const TestFunction zero = indicator_fn(0.0, Window(0.0, 1.0), m);
    const McEstimate mean_one = inner_product_mc(f, zero, 30000, 2028, m);
    REQUIRE(std::abs(mean_one.estimate - 1.0) <= 4.0 * mean_one.se);
    REQUIRE(mean_one.target == 1.0);
}

TEST_CASE("second moment of a coherent vector") {
    const BaseMeasure m = lebesgue();
    const TestFunction f = hat_fn(0.8, Window(0.0, 1.5), m);
    ConfigSampler sampler(m, f.support);
    RunningMoments stat;
    for (int t = 0; t < 30000; ++t) {
        Stream rng(31, t);
        const double v = exp_eval(f, sampler.sample(rng));
        stat.add(v * v);
    }
    REQUIRE(std::abs(stat.mean() - std::exp(f.norm2sq)) <= 4.0 * stat.se_mean());
}

TEST_CASE("square-integrability diagnostic flags the designed stress profile") {
    // psi = x^{-0.45} on (0,1]: in L^2, outside L^4, so phi - 1 = psi . psi
    // leaves L^2. Partial sums of ||phi-1||^2 over shrinking cutoffs must
    // blow past the divergence ceiling while still growing.
    const double alpha = 0.45;
    double partial = 0.0;
    bool divergent = false;
    double prev_inc = 0.0;
    for (int k = 1; k <= 40; ++k) {
        const double hi = std::pow(2.0, -(k - 1));
        const double lo = std::pow(2.0, -k);
        // (psi^2 + 2 psi)^2 = psi^4 + 4 psi^3 + 4 psi^2, exact power integrals
        auto power_int = [&](double p) {
            return (std::pow(hi, 1.0 - p) - std::pow(lo, 1.0 - p)) / (1.0 - p);
        };
        const double inc = power_int(4.0 * alpha) + 4.0 * power_int(3.0 * alpha) +
                           4.0 * power_int(2.0 * alpha);
        partial += inc;
        if (partial > 1e6 && inc > 0.01 * partial) {
            divergent = true;
            break;
        }
        prev_inc = inc;
    }
    (void)prev_inc;
    REQUIRE(divergent);

    // while the L^2 certificate of psi itself is finite
    const BaseMeasure m = lebesgue();
    const TestFunction psi = power_singular_fn(alpha, 1.0, m);
    REQUIRE(std::isfinite(psi.norm2sq));
    REQUIRE(std::abs(psi.norm2sq - 1.0 / (1.0 - 2.0 * alpha)) < 1e-12);
}

TEST_CASE("affine Koopman image") {
    const BaseMeasure m = lebesgue();
    const NsMap sw = make_swap(Window(0.0, 1.0), Window(1.0, 5.0), m);
    const TestFunction f = indicator_fn(0.3, Window(0.0, 1.0), m);

    const TestFunction id_image = affine_apply(identity_map(), f, m);
    for (double x : {0.1, 0.7, 2.0}) REQUIRE(std::abs(id_image(x) - f(x)) < 1e-12);

    // the cone boundary is fixed: f = -1 on its support maps to -1 there
    const TestFunction bottom = indicator_fn(-1.0, Window(0.0, 1.0), m);
    const TestFunction bottom_image = affine_apply(sw, bottom, m);
    for (double x : {1.5, 3.0, 4.9}) REQUIRE(std::abs(bottom_image(x) - (-1.0)) < 1e-9);

    // group law A_{S o T} = A_S A_T
    const BaseMeasure leb = lebesgue();
    const NsMap t = make_density_map({{Window(0.0, 1.0), 2.0}}, leb);
    const NsMap s = make_swap(Window(0.0, 1.0), Window(1.0, 3.0), leb);
    const NsMap st = compose(t, s);  // apply t, then s
    const TestFunction lhs = affine_apply(st, f, leb);
    const TestFunction rhs = affine_apply(s, affine_apply(t, f, leb), leb);
    for (double x : {0.2, 0.9, 1.4, 2.5, 3.5}) {
        REQUIRE(std::abs(lhs(x) - rhs(x)) < 1e-9);
    }

    // cone preservation on random members
    Stream rng(41, 0);
    for (int i = 0; i < 20; ++i) {
        const double h1 = -1.0 + 3.0 * rng.u01();
        const double h2 = -1.0 + 3.0 * rng.u01();
        const TestFunction g = make_test_function(
            [h1, h2](double x) {
                if (x >= 0.0 && x < 0.5) return h1;
                if (x >= 0.5 && x < 1.0) return h2;
                return 0.0;
            },
            Window(0.0, 1.0), m, "cone", std::nullopt, std::nullopt, {0.0, 0.5, 1.0});
        const TestFunction image = affine_apply(sw, g, m);
        for (int k = 0; k <= 256; ++k) {
            const double x = image.support.lo +
                             (image.support.hi - image.support.lo) * k / 256.0;
            REQUIRE(image(x) >= -1.0);
        }
    }
}

TEST_CASE("Weyl identity pathwise") {
    const BaseMeasure m = lebesgue();
    const TestFunction f = indicator_fn(0.3, Window(0.0, 1.0), m);
    ConfigSampler sampler(m, Window(-0.5, 5.5));

    // identity map: both sides are Exp f
    {
        const WeylChecker checker(identity_map(), f, m);
        Stream rng(53, 0);
        const PointConfig cfg = sampler.sample(rng);
        const WeylReport rep = checker.check(cfg);
        REQUIRE(rep.residual < 1e-12);
        REQUIRE(std::abs(rep.lhs - exp_eval(f, cfg)) < 1e-12);
    }
    // measure-preserving swap: prefactor is exactly 1
    {
        const NsMap eq = make_swap(Window(2.0, 3.0), Window(3.0, 4.0), m);
        const WeylChecker checker(eq, f, m);
        for (int t = 0; t < 100; ++t) {
            Stream rng(54, t);
            REQUIRE(checker.check(sampler.sample(rng)).residual < 1e-10);
        }
    }
    // unequal swap
    {
        const NsMap sw = make_swap(Window(0.0, 1.0), Window(1.0, 5.0), m);
        const WeylChecker checker(sw, f, m);
        for (int t = 0; t < 100; ++t) {
            Stream rng(55, t);
            REQUIRE(checker.check(sampler.sample(rng)).residual < 1e-9);
        }
    }
}
