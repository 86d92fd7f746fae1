#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace poissonlab {

using RealFn = std::function<double(double)>;

// Thrown when an adaptive routine cannot reach its tolerance. Carries the
// best residual estimate so reports can show how far off the result is.
class NumericFailure : public std::runtime_error {
public:
    NumericFailure(const std::string& what, double residual)
        : std::runtime_error(what + " (residual " + std::to_string(residual) + ")"),
          residual_(residual) {}

    double residual() const { return residual_; }

private:
    double residual_;
};

namespace detail {

struct SimpsonState {
    const RealFn* f = nullptr;
    double tol = 1e-10;
    double leftover = 0.0;  // error conceded at max depth
    int max_depth = 48;
    int min_depth = 5;  // guards against false convergence on narrow features
};

inline double simpson(double fa, double fm, double fb, double a, double b) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

inline double adaptive_step(SimpsonState& st, double a, double b, double fa, double fm,
                            double fb, double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = (*st.f)(lm);
    const double frm = (*st.f)(rm);
    if (!std::isfinite(flm) || !std::isfinite(frm)) {
        throw NumericFailure("non-finite integrand value", std::numeric_limits<double>::infinity());
    }
    const double left = simpson(fa, flm, fm, a, m);
    const double right = simpson(fm, frm, fb, m, b);
    const double err = (left + right - whole) / 15.0;
    if ((std::abs(err) <= tol && depth >= st.min_depth) || depth >= st.max_depth) {
        if (depth >= st.max_depth && std::abs(err) > tol) st.leftover += std::abs(err);
        return left + right + err;  // Richardson correction
    }
    return adaptive_step(st, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1) +
           adaptive_step(st, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1);
}

}  // namespace detail

namespace quad {

// Adaptive Simpson with Richardson error control. `breakpoints` lists known
// kinks or jumps of the integrand; the domain is split there first.
inline double integrate(const RealFn& f, double a, double b, double tol = 1e-10,
                        std::span<const double> breakpoints = {}) {
    if (!(a < b)) {
        if (a == b) return 0.0;
        throw std::invalid_argument("integrate: empty or reversed interval");
    }
    std::vector<double> knots{a, b};
    for (double x : breakpoints) {
        if (x > a && x < b) knots.push_back(x);
    }
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end()), knots.end());

    detail::SimpsonState st;
    st.f = &f;
    st.tol = tol;
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
        const double lo = knots[i], hi = knots[i + 1];
        const double mid = 0.5 * (lo + hi);
        const double flo = f(lo), fmid = f(mid), fhi = f(hi);
        if (!std::isfinite(flo) || !std::isfinite(fmid) || !std::isfinite(fhi)) {
            throw NumericFailure("non-finite integrand value",
                                 std::numeric_limits<double>::infinity());
        }
        const double whole = detail::simpson(flo, fmid, fhi, lo, hi);
        const double seg_tol = tol * std::max(1e-3, (hi - lo) / (b - a));
        total += detail::adaptive_step(st, lo, hi, flo, fmid, fhi, whole, seg_tol, 0);
    }
    if (st.leftover > 10.0 * tol) {
        throw NumericFailure("quadrature did not converge", st.leftover);
    }
    return total;
}

inline std::complex<double> integrate_complex(
    const std::function<std::complex<double>(double)>& f, double a, double b,
    double tol = 1e-9, std::span<const double> breakpoints = {}) {
    const double re = integrate([&f](double x) { return f(x).real(); }, a, b, tol, breakpoints);
    const double im = integrate([&f](double x) { return f(x).imag(); }, a, b, tol, breakpoints);
    return {re, im};
}

}  // namespace quad

// Root of g(x)=target for nondecreasing g on [lo,hi], bisection to xtol.
inline double bisect_monotone(const RealFn& g, double lo, double hi, double target,
                              double xtol = 1e-12) {
    double a = lo, b = hi;
    double ga = g(a) - target;
    double gb = g(b) - target;
    if (ga > 0.0 && ga < 1e-12) return a;
    if (gb < 0.0 && gb > -1e-12) return b;
    if (ga > 0.0 || gb < 0.0) {
        throw std::invalid_argument("bisect_monotone: target not bracketed");
    }
    while (b - a > xtol) {
        const double m = 0.5 * (a + b);
        if (g(m) - target <= 0.0) {
            a = m;
        } else {
            b = m;
        }
        if (m == a && m == b) break;  // denormal spacing
    }
    return 0.5 * (a + b);
}

// Locations in (lo,hi) where g crosses `level`, found by a uniform scan plus
// bisection refinement. Jump discontinuities are located the same way.
inline std::vector<double> level_crossings(const RealFn& g, double lo, double hi, double level,
                                           int n_scan = 2048) {
    std::vector<double> out;
    if (!(lo < hi)) return out;
    const double h = (hi - lo) / n_scan;
    double x0 = lo, g0 = g(x0) - level;
    for (int i = 1; i <= n_scan; ++i) {
        const double x1 = (i == n_scan) ? hi : lo + i * h;
        const double g1 = g(x1) - level;
        if ((g0 <= 0.0) != (g1 <= 0.0)) {
            double a = x0, b = x1, sa = g0;
            for (int it = 0; it < 60 && b - a > 1e-14 * std::max(1.0, std::abs(b)); ++it) {
                const double m = 0.5 * (a + b);
                const double sm = g(m) - level;
                if ((sa <= 0.0) == (sm <= 0.0)) {
                    a = m;
                    sa = sm;
                } else {
                    b = m;
                }
            }
            out.push_back(0.5 * (a + b));
        }
        x0 = x1;
        g0 = g1;
    }
    return out;
}

// One-pass central moments up to order four (Pebay update formulas).
class RunningMoments {
public:
    void add(double x) {
        const double n1 = static_cast<double>(n_);
        n_ += 1;
        const double n = static_cast<double>(n_);
        const double delta = x - mean_;
        const double delta_n = delta / n;
        const double delta_n2 = delta_n * delta_n;
        const double term1 = delta * delta_n * n1;
        m4_ += term1 * delta_n2 * (n * n - 3.0 * n + 3.0) + 6.0 * delta_n2 * m2_ - 4.0 * delta_n * m3_;
        m3_ += term1 * delta_n * (n - 2.0) - 3.0 * delta_n * m2_;
        m2_ += term1;
        mean_ += delta_n;
    }

    std::uint64_t count() const { return n_; }
    double mean() const { return mean_; }
    double variance() const { return n_ > 1 ? m2_ / (n_ - 1) : 0.0; }
    double se_mean() const { return n_ > 1 ? std::sqrt(variance() / n_) : 0.0; }

    // Standard error of the sample variance via the fourth central moment.
    double se_variance() const {
        if (n_ < 2) return 0.0;
        const double n = static_cast<double>(n_);
        const double m2 = m2_ / n;
        const double m4 = m4_ / n;
        const double v = (m4 - m2 * m2) / n;
        return v > 0.0 ? std::sqrt(v) : 0.0;
    }

private:
    std::uint64_t n_ = 0;
    double mean_ = 0.0, m2_ = 0.0, m3_ = 0.0, m4_ = 0.0;
};

// Sum_{j>k} 1/j^2 via the trigamma asymptotic expansion.
inline double tail_inv_square_sum(int k) {
    double x = k + 1;
    double acc = 0.0;
    while (x < 16.0) {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    const double ix = 1.0 / x;
    const double ix2 = ix * ix;
    // psi'(x) = 1/x + 1/(2x^2) + 1/(6x^3) - 1/(30x^5) + 1/(42x^7) - ...
    return acc + ix + 0.5 * ix2 + ix * ix2 * (1.0 / 6.0 - ix2 * (1.0 / 30.0 - ix2 / 42.0));
}

inline double sign_of(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

}  // namespace poissonlab
