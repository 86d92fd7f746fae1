#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "poissonlab/measure.hpp"
#include "poissonlab/rng.hpp"

namespace poissonlab {

// A finite Poisson configuration sampled on a finite-measure window.
struct PointConfig {
    std::vector<double> points;  // sorted
    Window window{0.0, 1.0};
    SeedTag seed_tag;

    // Points in a; requires a inside the sampled window (outside is unobserved).
    std::size_t count(const Window& a) const {
        if (!window.contains(a)) {
            throw std::invalid_argument("count: query window not covered by the sampled region");
        }
        auto lo = std::lower_bound(points.begin(), points.end(), a.lo);
        auto hi = std::lower_bound(points.begin(), points.end(), a.hi);
        return static_cast<std::size_t>(hi - lo);
    }

    std::size_t size() const { return points.size(); }
};

// Inverse-CDF sampler for one (measure, window) pair. Caches per-piece
// cumulative masses so repeated trials avoid requadrature.
class ConfigSampler {
public:
    ConfigSampler(const BaseMeasure& m, const Window& w) : measure_(&m), window_(w) {
        std::vector<double> cuts{w.lo, w.hi};
        for (double b : m.breakpoints()) {
            if (b > w.lo && b < w.hi) cuts.push_back(b);
        }
        std::sort(cuts.begin(), cuts.end());
        cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
        cum_.push_back(0.0);
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
            Segment s;
            s.w = Window(cuts[i], cuts[i + 1]);
            for (const auto& p : m.pieces()) {
                if (s.w.lo >= p.lo && s.w.hi <= p.hi && p.antiderivative) {
                    s.antiderivative = p.antiderivative;
                    s.scale = m.scale();
                    break;
                }
            }
            cum_.push_back(cum_.back() + m.mass(s.w));
            segs_.push_back(std::move(s));
        }
        total_ = cum_.back();
        if (!std::isfinite(total_)) throw std::invalid_argument("sampler: infinite window mass");
    }

    double mass() const { return total_; }
    const Window& window() const { return window_; }

    PointConfig sample(Stream& rng) const {
        PointConfig cfg;
        cfg.window = window_;
        cfg.seed_tag = rng.tag();
        if (total_ <= 0.0) return cfg;
        for (int attempt = 0; attempt < 10; ++attempt) {
            const std::uint64_t n = rng.poisson(total_);
            cfg.points.clear();
            cfg.points.reserve(n);
            for (std::uint64_t i = 0; i < n; ++i) cfg.points.push_back(draw_point(rng));
            std::sort(cfg.points.begin(), cfg.points.end());
            if (is_simple(cfg.points)) return cfg;
        }
        throw std::runtime_error("sample_config: duplicate points persisted after 10 resamples");
    }

    // One point with law mu|_w normalized; used by rejection samplers.
    double draw(Stream& rng) const { return draw_point(rng); }

private:
    struct Segment {
        Window w{0.0, 1.0};
        RealFn antiderivative;  // exact per-piece CDF shortcut when available
        double scale = 1.0;
    };

    double draw_point(Stream& rng) const {
        const double target = rng.u01() * total_;
        std::size_t i = std::upper_bound(cum_.begin(), cum_.end(), target) - cum_.begin();
        if (i == 0) i = 1;
        if (i > segs_.size()) i = segs_.size();
        const Segment& s = segs_[i - 1];
        const double want = std::min(target - cum_[i - 1], cum_[i] - cum_[i - 1]);
        if (s.antiderivative) {
            const double f_lo = s.antiderivative(s.w.lo);
            auto cdf = [&](double x) { return s.scale * (s.antiderivative(x) - f_lo); };
            return bisect_monotone(cdf, s.w.lo, s.w.hi, want, 1e-12);
        }
        auto cdf = [&](double x) { return x <= s.w.lo ? 0.0 : measure_->mass(Window(s.w.lo, x)); };
        return bisect_monotone(cdf, s.w.lo, s.w.hi, want, 1e-12);
    }

    static bool is_simple(const std::vector<double>& pts) {
        for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
            if (pts[i + 1] - pts[i] < 1e-15) return false;
        }
        return true;
    }

    const BaseMeasure* measure_;
    Window window_;
    std::vector<Segment> segs_;
    std::vector<double> cum_;
    double total_ = 0.0;
};

// Count-first sampling: N ~ Poisson(mu(w)), then N iid points from mu|_w.
inline PointConfig sample_config(const BaseMeasure& m, const Window& w, Stream& rng) {
    return ConfigSampler(m, w).sample(rng);
}

struct VoidCheckRow {
    Window window{0.0, 1.0};
    double mass = 0.0;
    double empirical = 0.0;
    double target = 0.0;
    double se = 0.0;
    double z = 0.0;
    bool pass = false;
};

struct VoidCheckReport {
    std::vector<VoidCheckRow> rows;
    // joint void probability of all (disjoint) windows vs the product law
    double joint_empirical = 0.0;
    double joint_target = 0.0;
    double joint_z = 0.0;
    bool pass = true;
};

// Renyi-style check: empirical void probabilities against e^{-mass}, plus
// independence of the zero events across disjoint windows.
inline VoidCheckReport renyi_void_check(const BaseMeasure& m, const std::vector<Window>& windows,
                                        std::uint64_t trials, std::uint64_t master_seed) {
    if (windows.empty()) throw std::invalid_argument("renyi_void_check: no windows");
    Window hull = windows.front();
    for (const auto& w : windows) hull = Window::hull(hull, w);
    ConfigSampler sampler(m, hull);

    std::vector<std::uint64_t> voids(windows.size(), 0);
    std::uint64_t joint_voids = 0;
    for (std::uint64_t t = 0; t < trials; ++t) {
        Stream rng(master_seed, t);
        const PointConfig cfg = sampler.sample(rng);
        bool all_void = true;
        for (std::size_t i = 0; i < windows.size(); ++i) {
            const bool v = cfg.count(windows[i]) == 0;
            voids[i] += v ? 1 : 0;
            all_void = all_void && v;
        }
        joint_voids += all_void ? 1 : 0;
    }

    VoidCheckReport rep;
    double joint_target = 1.0;
    for (std::size_t i = 0; i < windows.size(); ++i) {
        VoidCheckRow row;
        row.window = windows[i];
        row.mass = m.mass(windows[i]);
        row.target = std::exp(-row.mass);
        row.empirical = static_cast<double>(voids[i]) / static_cast<double>(trials);
        row.se = std::sqrt(row.target * (1.0 - row.target) / static_cast<double>(trials));
        row.z = row.se > 0.0 ? (row.empirical - row.target) / row.se : 0.0;
        row.pass = std::abs(row.z) <= 4.0;
        rep.pass = rep.pass && row.pass;
        joint_target *= row.target;
        rep.rows.push_back(row);
    }
    rep.joint_empirical = static_cast<double>(joint_voids) / static_cast<double>(trials);
    rep.joint_target = joint_target;
    const double jse = std::sqrt(joint_target * (1.0 - joint_target) / static_cast<double>(trials));
    rep.joint_z = jse > 0.0 ? (rep.joint_empirical - joint_target) / jse : 0.0;
    rep.pass = rep.pass && std::abs(rep.joint_z) <= 4.0;
    return rep;
}

}  // namespace poissonlab
