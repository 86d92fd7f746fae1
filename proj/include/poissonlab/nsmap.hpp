#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "poissonlab/measure.hpp"
#include "poissonlab/process.hpp"

namespace poissonlab {

// Nonsingular bijection T of the line with derivative T' = d(mu o T^{-1})/d(mu),
// supplied analytically by the builders and validated against the change of
// variables identity in tests.
struct NsMap {
    RealFn forward;
    RealFn inverse;
    RealFn rn_derivative;
    std::optional<Window> locality;    // forward == id outside
    std::optional<Window> rn_support;  // rn_derivative == 1 outside
    std::vector<double> breakpoints;   // kinks of forward / T'
    std::function<Window(const Window&)> map_window;  // image hull of a window
    std::string label;

    double operator()(double x) const { return forward(x); }
};

inline NsMap identity_map() {
    NsMap t;
    t.forward = [](double x) { return x; };
    t.inverse = t.forward;
    t.rn_derivative = [](double) { return 1.0; };
    // T' == 1 everywhere; a token support keeps schedule-driven integrals trivial
    t.rn_support = Window(0.0, 1e-9);
    t.locality = std::nullopt;
    t.map_window = [](const Window& w) { return w; };
    t.label = "identity";
    return t;
}

// Translation x -> x + t. On the weighted line T' is 2 or 1/2 on the
// interval swept across the density step at 0 and 1 elsewhere.
inline NsMap make_translation(double t, const BaseMeasure& m) {
    if (t == 0.0) return identity_map();
    NsMap out;
    out.forward = [t](double x) { return x + t; };
    out.inverse = [t](double x) { return x - t; };
    out.rn_derivative = [t, m](double x) {
        const double num = m.density(x - t);
        const double den = m.density(x);
        if (!(den > 0.0)) throw std::invalid_argument("translation: density vanishes");
        return num / den;
    };
    out.locality = std::nullopt;
    out.rn_support = t > 0.0 ? Window(0.0, t) : Window(t, 0.0);
    out.breakpoints = {std::min(0.0, t), std::max(0.0, t)};
    out.map_window = [t](const Window& w) { return Window(w.lo + t, w.hi + t); };
    out.label = "translation(" + std::to_string(t) + ")";
    return out;
}

// Mass-proportional involution exchanging A and B, identity elsewhere:
// T' = mu(B)/mu(A) on A and mu(A)/mu(B) on B.
inline NsMap make_swap(const Window& a, const Window& b, const BaseMeasure& m) {
    if (a.intersects(b)) throw std::invalid_argument("make_swap: windows must be disjoint");
    const double ma = m.mass(a);
    const double mb = m.mass(b);
    if (!(ma > 0.0) || !(mb > 0.0)) throw std::invalid_argument("make_swap: zero-mass window");
    const Window hull = Window::hull(a, b);

    auto match = [m](const Window& from, const Window& to, double ratio, double x) {
        // send x in `from` to the point of `to` at the same scaled cumulative mass
        const double part = x <= from.lo ? 0.0 : m.mass(Window(from.lo, x));
        const double want = std::min(ratio * part, m.mass(to));
        if (want <= 0.0) return to.lo;
        auto cdf = [&](double y) { return y <= to.lo ? 0.0 : m.mass(Window(to.lo, y)); };
        return bisect_monotone(cdf, to.lo, to.hi, want, 1e-13);
    };

    NsMap out;
    out.forward = [a, b, ma, mb, match](double x) {
        if (a.contains(x)) return match(a, b, mb / ma, x);
        if (b.contains(x)) return match(b, a, ma / mb, x);
        return x;
    };
    out.inverse = out.forward;  // involution
    out.rn_derivative = [a, b, ma, mb](double x) {
        if (a.contains(x)) return mb / ma;
        if (b.contains(x)) return ma / mb;
        return 1.0;
    };
    out.locality = hull;
    out.rn_support = hull;
    out.breakpoints = {a.lo, a.hi, b.lo, b.hi};
    out.map_window = [hull](const Window& w) { return Window::hull(w, hull); };
    out.label = "swap";
    return out;
}

// Monotone map with prescribed derivative phi, built by matching cumulative
// masses: T^{-1} = G^{-1} o H where G(x) = mu([x0,x]) and H(x) = int phi dmu.
// phi is a step function given as disjoint (window, value) pieces, 1 outside.
inline NsMap make_density_map(const std::vector<std::pair<Window, double>>& phi_pieces,
                              const BaseMeasure& m) {
    if (phi_pieces.empty()) return identity_map();
    for (const auto& [w, v] : phi_pieces) {
        (void)w;
        if (!(v > 0.0)) throw std::invalid_argument("make_density_map: phi must be positive");
    }
    Window hull = phi_pieces.front().first;
    for (const auto& [w, v] : phi_pieces) {
        (void)v;
        hull = Window::hull(hull, w);
    }
    const double anchor = hull.lo;

    auto phi_at = [phi_pieces](double x) {
        for (const auto& [w, v] : phi_pieces) {
            if (w.contains(x)) return v;
        }
        return 1.0;
    };
    // base mass and phi-weighted mass relative to the anchor
    auto mass_g = [m, anchor](double x) {
        if (x == anchor) return 0.0;
        return x > anchor ? m.mass(Window(anchor, x)) : -m.mass(Window(x, anchor));
    };
    auto mass_h = [m, anchor, phi_pieces](double x) {
        double v = x == anchor ? 0.0
                               : (x > anchor ? m.mass(Window(anchor, x)) : -m.mass(Window(x, anchor)));
        for (const auto& [w, c] : phi_pieces) {
            const double lo = std::min(std::max(w.lo, std::min(anchor, x)), std::max(anchor, x));
            const double hi = std::min(std::max(w.hi, std::min(anchor, x)), std::max(anchor, x));
            if (lo < hi) v += (c - 1.0) * m.mass(Window(lo, hi)) * (x > anchor ? 1.0 : -1.0);
        }
        return v;
    };
    const double surplus = mass_h(hull.hi) - mass_g(hull.hi);  // extra mass pushed right

    auto invert = [](const RealFn& f, double target, double lo_guess, double hi_guess) {
        double lo = lo_guess, hi = hi_guess;
        for (int i = 0; f(lo) > target; ++i) {
            if (i > 60) throw std::invalid_argument("density map: mass bracket failed");
            lo -= std::max(1.0, hi - lo);
        }
        for (int i = 0; f(hi) < target; ++i) {
            if (i > 60) throw std::invalid_argument("density map: measure has too little mass");
            hi += std::max(1.0, hi - lo);
        }
        return bisect_monotone(f, lo, hi, target, 1e-13);
    };

    NsMap out;
    out.forward = [=](double x) {
        if (x <= hull.lo) return x;
        return invert(mass_h, mass_g(x), hull.lo, std::max(x, hull.hi));
    };
    out.inverse = [=](double y) {
        if (y <= hull.lo) return y;
        return invert(mass_g, mass_h(y), hull.lo, std::max(y, hull.hi) + std::abs(surplus) + 1.0);
    };
    out.rn_derivative = [phi_at](double x) { return phi_at(x); };
    out.locality = std::nullopt;  // shifts the right tail by the mass surplus
    out.rn_support = hull;
    for (const auto& [w, v] : phi_pieces) {
        (void)v;
        out.breakpoints.push_back(w.lo);
        out.breakpoints.push_back(w.hi);
    }
    out.map_window = [fw = out.forward](const Window& w) {
        return Window(fw(w.lo), std::max(fw(w.hi), fw(w.lo) + 1e-12));
    };
    out.label = "density_map";
    return out;
}

// x -> s*x on the line; T' = 1/s for Lebesgue-like densities. Used as the
// canonical non-Aut2 stress case on infinite measure.
inline NsMap make_scaling(double s, const BaseMeasure& m) {
    if (!(s > 0.0)) throw std::invalid_argument("make_scaling: s must be positive");
    NsMap out;
    out.forward = [s](double x) { return s * x; };
    out.inverse = [s](double x) { return x / s; };
    out.rn_derivative = [s, m](double x) {
        const double den = m.density(x);
        if (!(den > 0.0)) throw std::invalid_argument("scaling: density vanishes");
        return m.density(x / s) / (s * den);
    };
    out.map_window = [s](const Window& w) { return Window(s * w.lo, s * w.hi); };
    out.label = "scaling(" + std::to_string(s) + ")";
    return out;
}

// Apply S first, then T. Chain rule: (T o S)' = (S' o T^{-1}) * T'.
inline NsMap compose(const NsMap& s, const NsMap& t) {
    NsMap out;
    out.forward = [sf = s.forward, tf = t.forward](double x) { return tf(sf(x)); };
    out.inverse = [si = s.inverse, ti = t.inverse](double x) { return si(ti(x)); };
    out.rn_derivative = [sd = s.rn_derivative, ti = t.inverse,
                         td = t.rn_derivative](double x) { return sd(ti(x)) * td(x); };
    if (s.locality && t.locality) {
        out.locality = Window::hull(*s.locality, *t.locality);
    }
    if (s.rn_support && t.rn_support && t.map_window) {
        out.rn_support = Window::hull(t.map_window(*s.rn_support), *t.rn_support);
    }
    out.breakpoints = s.breakpoints;
    for (double b : t.breakpoints) out.breakpoints.push_back(b);
    if (t.map_window) {
        for (double b : s.breakpoints) out.breakpoints.push_back(t.forward(b));
    }
    std::sort(out.breakpoints.begin(), out.breakpoints.end());
    out.breakpoints.erase(std::unique(out.breakpoints.begin(), out.breakpoints.end()),
                          out.breakpoints.end());
    if (s.map_window && t.map_window) {
        out.map_window = [sm = s.map_window, tm = t.map_window](const Window& w) {
            return tm(sm(w));
        };
    }
    out.label = t.label + "*" + s.label;
    return out;
}

// (T^{-1})' = 1 / (T' o T), from the chain rule applied to T o T^{-1} = id.
inline NsMap inverse_of(const NsMap& t) {
    NsMap out;
    out.forward = t.inverse;
    out.inverse = t.forward;
    out.rn_derivative = [tf = t.forward, td = t.rn_derivative](double x) {
        return 1.0 / td(tf(x));
    };
    out.locality = t.locality;
    // for our families the inverse support lies in the preimage of the support
    if (t.rn_support) {
        const double a = t.inverse(t.rn_support->lo);
        const double b = t.inverse(t.rn_support->hi);
        out.rn_support = *t.rn_support;
        if (std::min(a, b) < std::max(a, b)) {
            out.rn_support = Window::hull(*t.rn_support, Window(std::min(a, b), std::max(a, b)));
        }
    }
    out.breakpoints = t.breakpoints;
    for (double b : t.breakpoints) out.breakpoints.push_back(t.inverse(b));
    std::sort(out.breakpoints.begin(), out.breakpoints.end());
    out.breakpoints.erase(std::unique(out.breakpoints.begin(), out.breakpoints.end()),
                          out.breakpoints.end());
    out.map_window = [ti = t.inverse](const Window& w) {
        const double a = ti(w.lo), b = ti(w.hi);
        return Window(std::min(a, b), std::max(a, b));
    };
    out.label = t.label + "^-1";
    return out;
}

// Image configuration {T x : x in omega} on the image window.
inline PointConfig pushforward(const PointConfig& cfg, const NsMap& t) {
    if (!t.map_window) throw std::invalid_argument("pushforward: map has no window image rule");
    PointConfig out;
    out.window = t.map_window(cfg.window);
    out.seed_tag = cfg.seed_tag;
    out.points.reserve(cfg.points.size());
    for (double x : cfg.points) out.points.push_back(t.forward(x));
    std::sort(out.points.begin(), out.points.end());
    return out;
}

// Expanding window list with a declared bound on everything left outside.
struct WindowSchedule {
    std::vector<Window> windows;
    double tail_bound = 0.0;

    static WindowSchedule single(const Window& w) { return {{w}, 0.0}; }

    // [-1,1], [-2,2] \ [-1,1], ... as disjoint increments around the origin
    static WindowSchedule expanding(double first_radius, int steps, double growth = 2.0) {
        WindowSchedule s;
        double r_prev = 0.0, r = first_radius;
        for (int i = 0; i < steps; ++i) {
            if (r_prev == 0.0) {
                s.windows.emplace_back(-r, r);
            } else {
                s.windows.emplace_back(-r, -r_prev);
                s.windows.emplace_back(r_prev, r);
            }
            r_prev = r;
            r *= growth;
        }
        return s;
    }
};

// Schedule covering where T' can differ from 1; exact for supported maps.
inline WindowSchedule default_schedule(const NsMap& t) {
    if (t.rn_support) return WindowSchedule::single(*t.rn_support);
    return WindowSchedule::expanding(1.0, 24);
}

// Result of a membership-norm integral over a schedule. `divergent` is a
// verdict, not an error: partial sums passed the ceiling while still growing.
struct NormResult {
    double value = 0.0;
    bool divergent = false;
    double last_increment = 0.0;
};

namespace detail {

inline NormResult schedule_integral(const NsMap& t, const BaseMeasure& m,
                                    const WindowSchedule& schedule, const RealFn& integrand_of_td,
                                    double ceiling = 1e6) {
    NormResult r;
    for (const auto& w : schedule.windows) {
        auto h = [&](double x) { return integrand_of_td(t.rn_derivative(x)); };
        const double inc = m.integrate(h, w, BaseMeasure::kDefaultTol, t.breakpoints);
        r.value += inc;
        r.last_increment = inc;
        if (r.value > ceiling && inc > 0.01 * r.value) {
            r.divergent = true;
            return r;
        }
    }
    return r;
}

}  // namespace detail

// ||sqrt(T') - 1||_2^2; finiteness certifies that the suspension of T is
// nonsingular.
inline NormResult aut2_deficiency(const NsMap& t, const BaseMeasure& m,
                                  const WindowSchedule& schedule) {
    return detail::schedule_integral(t, m, schedule, [](double td) {
        const double s = std::sqrt(td) - 1.0;
        return s * s;
    });
}

inline NormResult aut2_deficiency(const NsMap& t, const BaseMeasure& m) {
    return aut2_deficiency(t, m, default_schedule(t));
}

// ||T' - 1||_1.
inline NormResult aut1_deficiency(const NsMap& t, const BaseMeasure& m,
                                  const WindowSchedule& schedule) {
    return detail::schedule_integral(t, m, schedule,
                                     [](double td) { return std::abs(td - 1.0); });
}

inline NormResult aut1_deficiency(const NsMap& t, const BaseMeasure& m) {
    return aut1_deficiency(t, m, default_schedule(t));
}

// chi(T) = int (T' - 1) dmu, additive under composition.
inline double chi(const NsMap& t, const BaseMeasure& m, const WindowSchedule& schedule) {
    const NormResult a1 = aut1_deficiency(t, m, schedule);
    if (a1.divergent) {
        throw std::invalid_argument("chi: map is outside the L1 class (||T'-1||_1 diverges)");
    }
    double v = 0.0;
    for (const auto& w : schedule.windows) {
        auto h = [&](double x) { return t.rn_derivative(x) - 1.0; };
        v += m.integrate(h, w, BaseMeasure::kDefaultTol, t.breakpoints);
    }
    return v;
}

inline double chi(const NsMap& t, const BaseMeasure& m) {
    return chi(t, m, default_schedule(t));
}

// Z-action generated by one map. Iterates are cached up to a bounded range;
// an optional closed-form hook (e.g. translations) replaces cached chains.
class ActionZ {
public:
    explicit ActionZ(NsMap generator, int cache_range = 64,
                     std::function<NsMap(long)> closed_form = nullptr)
        : generator_(std::move(generator)),
          closed_form_(std::move(closed_form)),
          cache_range_(cache_range) {
        cache_[0] = identity_map();
        cache_[1] = generator_;
        cache_[-1] = inverse_of(generator_);
    }

    const NsMap& generator() const { return generator_; }

    NsMap iterate(long g) const {
        if (closed_form_) return closed_form_(g);
        auto it = cache_.find(g);
        if (it != cache_.end()) return it->second;
        NsMap v = build(g);
        if (std::abs(g) <= cache_range_) {
            return cache_.emplace(g, std::move(v)).first->second;
        }
        return v;
    }

private:
    NsMap build(long g) const {
        const long step = g > 0 ? 1 : -1;
        const NsMap& unit = step > 0 ? cache_.at(1) : cache_.at(-1);
        long have = step;
        NsMap acc = unit;
        // extend from the nearest cached iterate of the same sign
        for (long k = g; k != step; k -= step) {
            auto it = cache_.find(k);
            if (it != cache_.end()) {
                have = k;
                acc = it->second;
                break;
            }
        }
        for (long k = have; k != g; k += step) {
            acc = compose(acc, unit);
            if (std::abs(k + step) <= cache_range_) cache_.emplace(k + step, acc);
        }
        return acc;
    }

    NsMap generator_;
    std::function<NsMap(long)> closed_form_;
    int cache_range_;
    mutable std::map<long, NsMap> cache_;
};

// ||c_T(g)||_2 = ||sqrt(T_g') - 1||_2.
inline double cocycle_norm(const ActionZ& a, long g, const BaseMeasure& m) {
    if (g == 0) return 0.0;
    const NsMap t = a.iterate(g);
    const NormResult r = aut2_deficiency(t, m, default_schedule(t));
    if (r.divergent) {
        throw std::invalid_argument("cocycle_norm: iterate left the L2 class");
    }
    return std::sqrt(std::max(0.0, r.value));
}

// mu(T(w)) computed by change of variables: int_w (T^{-1})' dmu. Exact for
// non-monotone maps where the window image is not an interval.
inline double image_mass(const NsMap& t, const BaseMeasure& m, const Window& w) {
    const NsMap inv = inverse_of(t);
    return m.integrate(inv.rn_derivative, w, BaseMeasure::kDefaultTol, inv.breakpoints);
}

// Invariant used by the tests: int h * T' dmu == int h o T dmu.
inline double change_of_variables_residual(const NsMap& t, const BaseMeasure& m, const RealFn& h,
                                           const Window& domain) {
    const double lhs = m.integrate([&](double x) { return h(x) * t.rn_derivative(x); }, domain,
                                   BaseMeasure::kDefaultTol, t.breakpoints);
    Window dom2 = t.map_window ? Window::hull(domain, t.map_window(domain)) : domain;
    const double ia = t.inverse(domain.lo);
    const double ib = t.inverse(domain.hi);
    if (std::min(ia, ib) < std::max(ia, ib)) {
        dom2 = Window::hull(dom2, Window(std::min(ia, ib), std::max(ia, ib)));
    }
    // h vanishes outside `domain`, so integrating h o T over the enlarged
    // window captures exactly the preimage contribution.
    const double rhs = m.integrate(
        [&](double x) {
            const double y = t.forward(x);
            return (y >= domain.lo && y < domain.hi) ? h(y) : 0.0;
        },
        dom2, BaseMeasure::kDefaultTol, t.breakpoints);
    return lhs - rhs;
}

}  // namespace poissonlab
