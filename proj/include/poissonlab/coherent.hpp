#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "poissonlab/measure.hpp"
#include "poissonlab/nsmap.hpp"
#include "poissonlab/process.hpp"
#include "poissonlab/rng.hpp"

namespace poissonlab {

// Real test function with finite-measure support. The integral and squared
// norm are computed by quadrature at construction unless exact values are
// supplied (needed for integrable singularities where quadrature cannot go).
struct TestFunction {
    RealFn fn;
    Window support{0.0, 1.0};
    double integral = 0.0;  // int f dmu
    double norm2sq = 0.0;   // int f^2 dmu
    bool cone_member = false;  // f >= -1 sampled on a grid
    std::vector<double> breakpoints;
    std::string label;

    double operator()(double x) const { return support.contains(x) ? fn(x) : 0.0; }
};

inline TestFunction make_test_function(RealFn fn, const Window& support, const BaseMeasure& m,
                                       std::string label = {},
                                       std::optional<double> integral_cache = std::nullopt,
                                       std::optional<double> norm2sq_cache = std::nullopt,
                                       std::vector<double> breakpoints = {}) {
    TestFunction f;
    f.fn = std::move(fn);
    f.support = support;
    f.breakpoints = std::move(breakpoints);
    f.label = std::move(label);
    f.integral = integral_cache ? *integral_cache
                                : m.integrate(f.fn, support, BaseMeasure::kDefaultTol,
                                              f.breakpoints);
    f.norm2sq = norm2sq_cache ? *norm2sq_cache
                              : m.integrate([&](double x) { return f.fn(x) * f.fn(x); }, support,
                                            BaseMeasure::kDefaultTol, f.breakpoints);
    if (!std::isfinite(f.norm2sq)) {
        throw std::invalid_argument("test function: squared norm is not finite");
    }
    f.cone_member = true;
    for (int i = 0; i <= 512; ++i) {
        const double x = support.lo + (support.hi - support.lo) * i / 512.0;
        if (f.fn(x) < -1.0) {
            f.cone_member = false;
            break;
        }
    }
    return f;
}

inline TestFunction indicator_fn(double height, const Window& w, const BaseMeasure& m) {
    const double mw = m.mass(w);
    return make_test_function([height, w](double x) { return w.contains(x) ? height : 0.0; }, w, m,
                              "indicator", height * mw, height * height * mw, {w.lo, w.hi});
}

// Triangular profile peaking at the window midpoint.
inline TestFunction hat_fn(double height, const Window& w, const BaseMeasure& m) {
    const double mid = 0.5 * (w.lo + w.hi);
    const double half = 0.5 * (w.hi - w.lo);
    auto fn = [height, mid, half](double x) {
        const double d = 1.0 - std::abs(x - mid) / half;
        return d > 0.0 ? height * d : 0.0;
    };
    return make_test_function(fn, w, m, "hat", std::nullopt, std::nullopt, {w.lo, mid, w.hi});
}

// Smooth cosine bump supported on w.
inline TestFunction bump_fn(double height, const Window& w, const BaseMeasure& m) {
    const double mid = 0.5 * (w.lo + w.hi);
    const double half = 0.5 * (w.hi - w.lo);
    auto fn = [height, mid, half](double x) {
        const double u = (x - mid) / half;
        if (u <= -1.0 || u >= 1.0) return 0.0;
        const double c = std::cos(0.5 * M_PI * u);
        return height * c * c;
    };
    return make_test_function(fn, w, m, "bump");
}

// x^{-alpha} on (0, hi] over Lebesgue density; in L^2 but not in L^4 for
// alpha in (1/4, 1/2), the stress profile whose square leaves L^2.
inline TestFunction power_singular_fn(double alpha, double hi, const BaseMeasure& m) {
    if (!(alpha > 0.0 && alpha < 0.5)) {
        throw std::invalid_argument("power_singular_fn: need alpha in (0, 1/2)");
    }
    if (m.label() != "lebesgue") {
        throw std::invalid_argument("power_singular_fn: exact moments assume Lebesgue density");
    }
    auto fn = [alpha](double x) { return x > 0.0 ? std::pow(x, -alpha) : 0.0; };
    const double integral = std::pow(hi, 1.0 - alpha) / (1.0 - alpha);
    const double norm2sq = std::pow(hi, 1.0 - 2.0 * alpha) / (1.0 - 2.0 * alpha);
    return make_test_function(fn, Window(0.0, hi), m, "power_singular", integral, norm2sq);
}

// f . g = (1+f)(1+g) - 1.
inline TestFunction bullet(const TestFunction& f, const TestFunction& g, const BaseMeasure& m) {
    const Window support = Window::hull(f.support, g.support);
    auto fn = [f, g](double x) {
        const double a = f(x), b = g(x);
        return a + b + a * b;
    };
    std::vector<double> brk(f.breakpoints);
    brk.insert(brk.end(), g.breakpoints.begin(), g.breakpoints.end());
    brk.push_back(f.support.lo);
    brk.push_back(f.support.hi);
    brk.push_back(g.support.lo);
    brk.push_back(g.support.hi);
    return make_test_function(fn, support, m, "(" + f.label + ")*(" + g.label + ")", std::nullopt,
                              std::nullopt, std::move(brk));
}

inline double inner_product(const TestFunction& f, const TestFunction& g, const BaseMeasure& m) {
    const auto iw = intersect(f.support, g.support);
    if (!iw) return 0.0;
    std::vector<double> brk(f.breakpoints);
    brk.insert(brk.end(), g.breakpoints.begin(), g.breakpoints.end());
    return m.integrate([&](double x) { return f(x) * g(x); }, *iw, BaseMeasure::kDefaultTol, brk);
}

// Exp f evaluated on one configuration:
//   e^{-int f dmu} * prod_{x in omega} (1 + f(x)).
// The product is accumulated in log space with the sign tracked separately.
inline double exp_eval(const TestFunction& f, const PointConfig& cfg) {
    if (!cfg.window.contains(f.support)) {
        throw std::invalid_argument("exp_eval: support not covered by the sampled window");
    }
    double log_abs = -f.integral;
    double sign = 1.0;
    for (double x : cfg.points) {
        if (!f.support.contains(x)) continue;
        const double factor = 1.0 + f.fn(x);
        if (factor == 0.0) return 0.0;
        if (factor < 0.0) sign = -sign;
        log_abs += std::log(std::abs(factor));
    }
    return sign * std::exp(log_abs);
}

// Extended coherent vector Exp(f . g) = e^{-int f g dmu} Exp f Exp g.
inline double extended_exp_eval(const TestFunction& f, const TestFunction& g,
                                const PointConfig& cfg, const BaseMeasure& m) {
    const double cross = inner_product(f, g, m);
    return std::exp(-cross) * exp_eval(f, cfg) * exp_eval(g, cfg);
}

struct AbsIdentityReport {
    double lhs = 0.0;   // |Exp phi|(omega)
    double rhs = 0.0;   // e^{-2 int_{phi+1<0}(phi+1) dmu} Exp(|1+phi|-1)(omega)
    double residual = 0.0;  // relative
};

// Pathwise check of the absolute-value identity for real phi that may dip
// below -1. phi~ := |1+phi| - 1.
inline AbsIdentityReport abs_exp_identity_check(const TestFunction& phi, const PointConfig& cfg,
                                                const BaseMeasure& m) {
    std::vector<double> brk(phi.breakpoints);
    const auto crossings = level_crossings([&](double x) { return phi(x); }, phi.support.lo,
                                           phi.support.hi, -1.0);
    brk.insert(brk.end(), crossings.begin(), crossings.end());

    const double below = m.integrate(
        [&](double x) {
            const double v = phi(x);
            return v + 1.0 < 0.0 ? v + 1.0 : 0.0;
        },
        phi.support, BaseMeasure::kDefaultTol, brk);

    TestFunction tilde = make_test_function(
        [phi](double x) { return std::abs(1.0 + phi(x)) - 1.0; }, phi.support, m,
        phi.label + "~", std::nullopt, std::nullopt, brk);

    AbsIdentityReport rep;
    rep.lhs = std::abs(exp_eval(phi, cfg));
    rep.rhs = std::exp(-2.0 * below) * exp_eval(tilde, cfg);
    const double denom = std::max({std::abs(rep.lhs), std::abs(rep.rhs), 1e-300});
    rep.residual = std::abs(rep.lhs - rep.rhs) / denom;
    return rep;
}

struct McEstimate {
    double estimate = 0.0;
    double se = 0.0;
    double target = 0.0;
    double z() const { return se > 0.0 ? (estimate - target) / se : 0.0; }
};

// Monte Carlo mean of Exp f * Exp g against the exponential relation
// <Exp f, Exp g> = e^{<f,g>}.
inline McEstimate inner_product_mc(const TestFunction& f, const TestFunction& g,
                                   std::uint64_t trials, std::uint64_t master_seed,
                                   const BaseMeasure& m) {
    const Window hull = Window::hull(f.support, g.support);
    ConfigSampler sampler(m, hull);
    RunningMoments stat;
    for (std::uint64_t t = 0; t < trials; ++t) {
        Stream rng(master_seed, t);
        const PointConfig cfg = sampler.sample(rng);
        stat.add(exp_eval(f, cfg) * exp_eval(g, cfg));
    }
    McEstimate est;
    est.estimate = stat.mean();
    est.se = stat.se_mean();
    est.target = std::exp(inner_product(f, g, m));
    return est;
}

// Affine Koopman image A_T f = U_T f + (sqrt(T') - 1) with
// U_T f = sqrt(T') * (f o T^{-1}); preserves {f >= -1}.
inline TestFunction affine_apply(const NsMap& t, const TestFunction& f, const BaseMeasure& m) {
    if (!t.map_window) throw std::invalid_argument("affine_apply: map lacks a window image rule");
    Window support = t.map_window(f.support);
    if (t.rn_support) support = Window::hull(support, *t.rn_support);
    auto fn = [t, f](double x) {
        const double fi = f(t.inverse(x));
        return (fi + 1.0) * std::sqrt(t.rn_derivative(x)) - 1.0;
    };
    std::vector<double> brk(t.breakpoints);
    for (double b : f.breakpoints) brk.push_back(t.forward(b));
    brk.push_back(t.forward(f.support.lo));
    brk.push_back(t.forward(f.support.hi));
    return make_test_function(fn, support, m, "A[" + t.label + "](" + f.label + ")", std::nullopt,
                              std::nullopt, std::move(brk));
}

struct WeylReport {
    double lhs = 0.0;  // (U_{T_*} Exp f)(omega) computed pathwise
    double rhs = 0.0;  // (W_{A_T} Exp f)(omega) via the affine image
    double residual = 0.0;
};

// Path-loop form of the Weyl identity check: every integral on either side
// is hoisted out, per path only the two coherent products remain.
class WeylChecker {
public:
    WeylChecker(const NsMap& t, const TestFunction& f, const BaseMeasure& m);
    WeylReport check(const PointConfig& cfg) const;

private:
    NsMap map_;
    NsMap inverse_;
    TestFunction f_;
    TestFunction affine_image_;
    double chi_ = 0.0;
    double prefactor_log_ = 0.0;  // -||c||^2/2 - <c, U_T f>
};

// Hoisted pathwise |Exp phi| identity: the below-(-1) mass and the folded
// profile are computed once.
class AbsIdentityChecker {
public:
    AbsIdentityChecker(const TestFunction& phi, const BaseMeasure& m);
    AbsIdentityReport check(const PointConfig& cfg) const;

private:
    TestFunction phi_;
    TestFunction tilde_;
    double below_ = 0.0;
};

// Pathwise identity between the Koopman operator of the suspension and the
// Weyl operator of the affine image. The left side needs (T_*)' which is the
// absolutely convergent product e^{-chi(T)} prod T'(x).
inline WeylReport weyl_koopman_check(const NsMap& t, const TestFunction& f, const PointConfig& cfg,
                                     const BaseMeasure& m) {
    // left: sqrt((T_*)'(omega)) * Exp f(T_*^{-1} omega)
    const double chi_t = chi(t, m);
    double log_prod = 0.0;
    for (double x : cfg.points) log_prod += std::log(t.rn_derivative(x));
    const double rn_susp = std::exp(-chi_t + log_prod);
    const PointConfig pulled = pushforward(cfg, inverse_of(t));
    WeylReport rep;
    rep.lhs = std::sqrt(rn_susp) * exp_eval(f, pulled);

    // right: e^{-||c||^2/2 - <c, U_T f>} * Exp(A_T f)(omega)
    const double c_norm_sq = aut2_deficiency(t, m).value;
    const Window dom = t.rn_support ? Window::hull(*t.rn_support, t.map_window(f.support))
                                    : t.map_window(f.support);
    std::vector<double> brk(t.breakpoints);
    for (double b : f.breakpoints) brk.push_back(t.forward(b));
    brk.push_back(t.forward(f.support.lo));
    brk.push_back(t.forward(f.support.hi));
    const double c_dot_utf = m.integrate(
        [&](double x) {
            const double td = t.rn_derivative(x);
            return (std::sqrt(td) - 1.0) * std::sqrt(td) * f(t.inverse(x));
        },
        dom, BaseMeasure::kDefaultTol, brk);
    const TestFunction af = affine_apply(t, f, m);
    rep.rhs = std::exp(-0.5 * c_norm_sq - c_dot_utf) * exp_eval(af, cfg);

    const double denom = std::max({std::abs(rep.lhs), std::abs(rep.rhs), 1e-300});
    rep.residual = std::abs(rep.lhs - rep.rhs) / denom;
    return rep;
}

inline WeylChecker::WeylChecker(const NsMap& t, const TestFunction& f, const BaseMeasure& m)
    : map_(t), inverse_(inverse_of(t)), f_(f) {
    chi_ = chi(t, m);
    const double c_norm_sq = aut2_deficiency(t, m).value;
    const Window dom = t.rn_support ? Window::hull(*t.rn_support, t.map_window(f.support))
                                    : t.map_window(f.support);
    std::vector<double> brk(t.breakpoints);
    for (double b : f.breakpoints) brk.push_back(t.forward(b));
    brk.push_back(t.forward(f.support.lo));
    brk.push_back(t.forward(f.support.hi));
    const double c_dot_utf = m.integrate(
        [&](double x) {
            const double td = t.rn_derivative(x);
            return (std::sqrt(td) - 1.0) * std::sqrt(td) * f(t.inverse(x));
        },
        dom, BaseMeasure::kDefaultTol, brk);
    prefactor_log_ = -0.5 * c_norm_sq - c_dot_utf;
    affine_image_ = affine_apply(t, f, m);
}

inline WeylReport WeylChecker::check(const PointConfig& cfg) const {
    WeylReport rep;
    double log_prod = 0.0;
    for (double x : cfg.points) log_prod += std::log(map_.rn_derivative(x));
    const PointConfig pulled = pushforward(cfg, inverse_);
    rep.lhs = std::exp(0.5 * (-chi_ + log_prod)) * exp_eval(f_, pulled);
    rep.rhs = std::exp(prefactor_log_) * exp_eval(affine_image_, cfg);
    const double denom = std::max({std::abs(rep.lhs), std::abs(rep.rhs), 1e-300});
    rep.residual = std::abs(rep.lhs - rep.rhs) / denom;
    return rep;
}

inline AbsIdentityChecker::AbsIdentityChecker(const TestFunction& phi, const BaseMeasure& m)
    : phi_(phi) {
    std::vector<double> brk(phi.breakpoints);
    const auto crossings =
        level_crossings([&](double x) { return phi(x); }, phi.support.lo, phi.support.hi, -1.0);
    brk.insert(brk.end(), crossings.begin(), crossings.end());
    below_ = m.integrate(
        [&](double x) {
            const double v = phi(x);
            return v + 1.0 < 0.0 ? v + 1.0 : 0.0;
        },
        phi.support, BaseMeasure::kDefaultTol, brk);
    tilde_ = make_test_function([phi](double x) { return std::abs(1.0 + phi(x)) - 1.0; },
                                phi.support, m, phi.label + "~", std::nullopt, std::nullopt, brk);
}

inline AbsIdentityReport AbsIdentityChecker::check(const PointConfig& cfg) const {
    AbsIdentityReport rep;
    rep.lhs = std::abs(exp_eval(phi_, cfg));
    rep.rhs = std::exp(-2.0 * below_) * exp_eval(tilde_, cfg);
    const double denom = std::max({std::abs(rep.lhs), std::abs(rep.rhs), 1e-300});
    rep.residual = std::abs(rep.lhs - rep.rhs) / denom;
    return rep;
}

}  // namespace poissonlab
