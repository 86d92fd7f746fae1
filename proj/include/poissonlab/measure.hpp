#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "poissonlab/numeric.hpp"

namespace poissonlab {

// Half-open interval [lo, hi) of finite extent.
struct Window {
    double lo = 0.0;
    double hi = 0.0;

    Window() = default;
    Window(double l, double h) : lo(l), hi(h) {
        if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
            throw std::invalid_argument("Window: need finite lo < hi");
        }
    }

    double length() const { return hi - lo; }
    bool contains(double x) const { return x >= lo && x < hi; }
    bool contains(const Window& w) const { return w.lo >= lo && w.hi <= hi; }
    bool intersects(const Window& w) const { return w.lo < hi && lo < w.hi; }

    static Window hull(const Window& a, const Window& b) {
        return Window(std::min(a.lo, b.lo), std::max(a.hi, b.hi));
    }
};

inline std::optional<Window> intersect(const Window& a, const Window& b) {
    const double lo = std::max(a.lo, b.lo);
    const double hi = std::min(a.hi, b.hi);
    if (lo < hi) return Window(lo, hi);
    return std::nullopt;
}

// A sigma-finite measure on the line given by a piecewise density. Pieces may
// extend to +-infinity; every query goes through a finite window. Densities
// come with an optional exact antiderivative which short-circuits quadrature.
class BaseMeasure {
public:
    struct Piece {
        double lo = -std::numeric_limits<double>::infinity();
        double hi = std::numeric_limits<double>::infinity();
        RealFn density;
        RealFn antiderivative;  // may be empty
    };

    BaseMeasure(std::vector<Piece> pieces, double scale = 1.0, std::string label = {})
        : pieces_(std::move(pieces)), scale_(scale), label_(std::move(label)) {
        if (!(scale_ > 0.0)) throw std::invalid_argument("BaseMeasure: scale must be positive");
        if (pieces_.empty()) throw std::invalid_argument("BaseMeasure: no pieces");
        for (std::size_t i = 0; i + 1 < pieces_.size(); ++i) {
            if (pieces_[i].hi > pieces_[i + 1].lo) {
                throw std::invalid_argument("BaseMeasure: pieces must be disjoint and ordered");
            }
        }
        for (const auto& p : pieces_) {
            if (std::isfinite(p.lo)) breakpoints_.push_back(p.lo);
            if (std::isfinite(p.hi)) breakpoints_.push_back(p.hi);
            // spot-check nonnegativity on a few interior points
            const double lo = std::isfinite(p.lo) ? p.lo : std::min(0.0, p.hi) - 8.0;
            const double hi = std::isfinite(p.hi) ? p.hi : std::max(0.0, p.lo) + 8.0;
            for (int i = 1; i < 8; ++i) {
                const double x = lo + (hi - lo) * i / 8.0;
                if (p.density(x) < 0.0) {
                    throw std::invalid_argument("BaseMeasure: negative density sampled");
                }
            }
        }
        std::sort(breakpoints_.begin(), breakpoints_.end());
        breakpoints_.erase(std::unique(breakpoints_.begin(), breakpoints_.end()),
                           breakpoints_.end());
    }

    const std::string& label() const { return label_; }
    double scale() const { return scale_; }
    const std::vector<double>& breakpoints() const { return breakpoints_; }
    const std::vector<Piece>& pieces() const { return pieces_; }

    double density(double x) const {
        for (const auto& p : pieces_) {
            if (x >= p.lo && x < p.hi) return scale_ * p.density(x);
        }
        return 0.0;
    }

    // mu(w), exact through antiderivatives where available.
    double mass(const Window& w, double tol = kDefaultTol) const {
        double total = 0.0;
        for (const auto& p : pieces_) {
            const double lo = std::max(w.lo, p.lo);
            const double hi = std::min(w.hi, p.hi);
            if (!(lo < hi)) continue;
            if (p.antiderivative) {
                total += scale_ * (p.antiderivative(hi) - p.antiderivative(lo));
            } else {
                total += scale_ * quad::integrate(p.density, lo, hi, tol);
            }
        }
        if (total < 0.0 && total > -1e-12) total = 0.0;
        return total;
    }

    // integral of h d(mu) over w. Extra breakpoints let callers declare kinks
    // of h so the adaptive pass splits there.
    double integrate(const RealFn& h, const Window& w, double tol = kDefaultTol,
                     std::span<const double> extra_breakpoints = {}) const {
        std::vector<double> knots(breakpoints_);
        knots.insert(knots.end(), extra_breakpoints.begin(), extra_breakpoints.end());
        double total = 0.0;
        for (const auto& p : pieces_) {
            const double lo = std::max(w.lo, p.lo);
            const double hi = std::min(w.hi, p.hi);
            if (!(lo < hi)) continue;
            auto integrand = [&](double x) { return h(x) * scale_ * p.density(x); };
            total += quad::integrate(integrand, lo, hi, tol, knots);
        }
        return total;
    }

    // x in w with mu([w.lo, x]) = u * mu(w); bisection to xtol.
    double quantile(const Window& w, double u, double xtol = 1e-12) const {
        if (!(u >= 0.0 && u <= 1.0)) throw std::invalid_argument("quantile: u outside [0,1]");
        const double total = mass(w);
        if (!(total > 0.0)) throw std::invalid_argument("quantile: window has zero mass");
        if (u == 0.0) return w.lo;
        if (u == 1.0) return w.hi;
        const double target = u * total;
        auto cdf = [&](double x) { return x <= w.lo ? 0.0 : mass(Window(w.lo, x)); };
        return bisect_monotone(cdf, w.lo, w.hi, target, xtol);
    }

    // t*mu.
    BaseMeasure scaled(double t) const {
        if (!(t > 0.0)) throw std::invalid_argument("scale: t must be positive");
        BaseMeasure out = *this;
        out.scale_ *= t;
        return out;
    }

    static constexpr double kDefaultTol = 1e-10;

private:
    std::vector<Piece> pieces_;
    double scale_ = 1.0;
    std::string label_;
    std::vector<double> breakpoints_;
};

// --- named builders used by scenario configs ---

inline BaseMeasure lebesgue() {
    BaseMeasure::Piece p;
    p.density = [](double) { return 1.0; };
    p.antiderivative = [](double x) { return x; };
    return BaseMeasure({p}, 1.0, "lebesgue");
}

// dm/dx = 1 on (-inf,0), 2 on [0,inf).
inline BaseMeasure weighted_line() {
    BaseMeasure::Piece neg;
    neg.hi = 0.0;
    neg.density = [](double) { return 1.0; };
    neg.antiderivative = [](double x) { return x; };
    BaseMeasure::Piece pos;
    pos.lo = 0.0;
    pos.density = [](double) { return 2.0; };
    pos.antiderivative = [](double x) { return 2.0 * x; };
    return BaseMeasure({neg, pos}, 1.0, "weighted_line");
}

// density e^{-x} on [0, inf)
inline BaseMeasure exp_decay() {
    BaseMeasure::Piece p;
    p.lo = 0.0;
    p.density = [](double x) { return std::exp(-x); };
    p.antiderivative = [](double x) { return -std::exp(-x); };
    return BaseMeasure({p}, 1.0, "exp_decay");
}

// Step density from a breakpoint/value table: values[i] on
// [breaks[i], breaks[i+1]), zero outside [breaks.front(), breaks.back()).
inline BaseMeasure piecewise_constant(const std::vector<double>& breaks,
                                      const std::vector<double>& values) {
    if (breaks.size() != values.size() + 1 || values.empty()) {
        throw std::invalid_argument("piecewise_constant: need n+1 breakpoints for n values");
    }
    std::vector<BaseMeasure::Piece> pieces;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!(breaks[i] < breaks[i + 1])) {
            throw std::invalid_argument("piecewise_constant: breakpoints must increase");
        }
        if (values[i] < 0.0) throw std::invalid_argument("piecewise_constant: negative density");
        BaseMeasure::Piece p;
        p.lo = breaks[i];
        p.hi = breaks[i + 1];
        const double c = values[i];
        p.density = [c](double) { return c; };
        p.antiderivative = [c](double x) { return c * x; };
        pieces.push_back(std::move(p));
    }
    return BaseMeasure(std::move(pieces), 1.0, "piecewise");
}

// Measure with an extra density factor (d nu = f d mu); used to sample
// nu-intensity processes. `f_antideriv_of_mu` is optional and must be the
// antiderivative of f times the mu-density.
inline BaseMeasure with_density(const BaseMeasure& m, const RealFn& f,
                                std::span<const double> extra_breakpoints = {},
                                const std::string& label = "reweighted") {
    std::vector<double> knots(m.breakpoints());
    knots.insert(knots.end(), extra_breakpoints.begin(), extra_breakpoints.end());
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
    if (knots.size() < 2) throw std::invalid_argument("with_density: unbounded support");
    std::vector<BaseMeasure::Piece> pieces;
    for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
        BaseMeasure::Piece p;
        p.lo = knots[i];
        p.hi = knots[i + 1];
        p.density = [m, f](double x) { return f(x) * m.density(x); };
        pieces.push_back(std::move(p));
    }
    return BaseMeasure(std::move(pieces), 1.0, label);
}

}  // namespace poissonlab
