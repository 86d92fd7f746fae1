#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "poissonlab/coherent.hpp"
#include "poissonlab/measure.hpp"
#include "poissonlab/nsmap.hpp"
#include "poissonlab/process.hpp"

namespace poissonlab {

// Density ratio phi = d(nu)/d(mu), equal to 1 outside its support windows.
// The epsilon regions X_eps = {|log phi| > eps} are always contained in the
// support, so truncated integrals stay on finite-mass sets.
struct DensityRatio {
    RealFn phi_fn;
    std::vector<Window> support;     // disjoint windows where phi may differ from 1
    std::vector<double> breakpoints;
    std::string label;

    double phi(double x) const {
        for (const auto& w : support) {
            if (w.contains(x)) return phi_fn(x);
        }
        return 1.0;
    }
    double log_phi(double x) const { return std::log(phi(x)); }

    Window support_hull() const {
        if (support.empty()) throw std::invalid_argument("density ratio with empty support");
        Window h = support.front();
        for (const auto& w : support) h = Window::hull(h, w);
        return h;
    }
};

// Step ratio from (window, value) pieces.
inline DensityRatio make_step_ratio(const std::vector<std::pair<Window, double>>& pieces,
                                    std::string label = "step_ratio") {
    DensityRatio d;
    for (const auto& [w, v] : pieces) {
        if (!(v > 0.0)) throw std::invalid_argument("density ratio: phi must be positive");
        d.support.push_back(w);
        d.breakpoints.push_back(w.lo);
        d.breakpoints.push_back(w.hi);
    }
    d.phi_fn = [pieces](double x) {
        for (const auto& [w, v] : pieces) {
            if (w.contains(x)) return v;
        }
        return 1.0;
    };
    d.label = std::move(label);
    return d;
}

// Ratio carried by a nonsingular map: phi = T'.
inline DensityRatio ratio_of_map(const NsMap& t, std::string label = {}) {
    if (!t.rn_support) {
        throw std::invalid_argument("ratio_of_map: map has unbounded derivative support");
    }
    DensityRatio d;
    d.phi_fn = t.rn_derivative;
    d.support = {*t.rn_support};
    d.breakpoints = t.breakpoints;
    d.label = label.empty() ? t.label + "'" : std::move(label);
    return d;
}

namespace detail {

inline std::string format_tail(const std::vector<double>& xs, std::size_t keep = 5) {
    std::string out = "[";
    const std::size_t start = xs.size() > keep ? xs.size() - keep : 0;
    for (std::size_t i = start; i < xs.size(); ++i) {
        if (i > start) out += ", ";
        out += std::to_string(xs[i]);
    }
    return out + "]";
}

// Integrate h(x) d mu over the part of the ratio support where
// |log phi| > eps; domain splits come from scanned level crossings.
inline double integrate_on_eps_region(const DensityRatio& d, const BaseMeasure& m, const RealFn& h,
                                      double eps, double tol = BaseMeasure::kDefaultTol) {
    double total = 0.0;
    for (const auto& w : d.support) {
        std::vector<double> brk(d.breakpoints);
        auto logabs = [&](double x) { return std::abs(d.log_phi(x)); };
        const auto cr = level_crossings(logabs, w.lo, w.hi, eps, 512);
        brk.insert(brk.end(), cr.begin(), cr.end());
        total += m.integrate([&](double x) { return logabs(x) > eps ? h(x) : 0.0; }, w, tol, brk);
    }
    return total;
}

}  // namespace detail

// nu-intensity measure d nu = phi d mu, usable by the samplers. The sampling
// window must be listed so the reweighted measure covers it.
inline BaseMeasure nu_measure(const DensityRatio& d, const BaseMeasure& m,
                              const Window& sampling_window) {
    std::vector<double> brk(d.breakpoints);
    brk.push_back(sampling_window.lo);
    brk.push_back(sampling_window.hi);
    return with_density(m, [d](double x) { return d.phi(x); }, brk, "nu[" + d.label + "]");
}

// Samples the nu-intensity process by thinning-free rejection against mu: a
// Poisson(nu(w)) count, then mu-points accepted with probability
// phi(x)/envelope. Keeps the inverse-CDF hot path on the base measure, where
// exact antiderivatives apply.
class NuConfigSampler {
public:
    NuConfigSampler(const DensityRatio& d, const BaseMeasure& m, const Window& w)
        : ratio_(d), base_(m, w), window_(w) {
        nu_mass_ = nu_measure(d, m, w).mass(w);
        envelope_ = 1.0;
        for (int i = 0; i <= 1024; ++i) {
            envelope_ = std::max(envelope_, ratio_.phi(w.lo + (w.hi - w.lo) * i / 1024.0));
        }
        for (const auto& sw : d.support) {
            envelope_ = std::max(envelope_, ratio_.phi(0.5 * (sw.lo + sw.hi)));
            envelope_ = std::max(envelope_, ratio_.phi(sw.lo));
        }
    }

    double mass() const { return nu_mass_; }

    PointConfig sample(Stream& rng) const {
        PointConfig cfg;
        cfg.window = window_;
        cfg.seed_tag = rng.tag();
        const std::uint64_t n = rng.poisson(nu_mass_);
        cfg.points.reserve(n);
        for (std::uint64_t i = 0; i < n; ++i) {
            for (int guard = 0; guard < 100000; ++guard) {
                const double x = base_.draw(rng);
                const double p = ratio_.phi(x) / envelope_;
                if (p > 1.0 + 1e-12) {
                    throw std::runtime_error("nu sampler: envelope violated");
                }
                if (rng.u01() < p) {
                    cfg.points.push_back(x);
                    break;
                }
            }
        }
        std::sort(cfg.points.begin(), cfg.points.end());
        return cfg;
    }

private:
    DensityRatio ratio_;
    ConfigSampler base_;
    Window window_;
    double nu_mass_ = 0.0;
    double envelope_ = 1.0;
};

inline double integral_phi_minus_1(const DensityRatio& d, const BaseMeasure& m) {
    double v = 0.0;
    for (const auto& w : d.support) {
        v += m.integrate([&](double x) { return d.phi(x) - 1.0; }, w, BaseMeasure::kDefaultTol,
                         d.breakpoints);
    }
    return v;
}

inline double sqrt_phi_minus_1_norm2sq(const DensityRatio& d, const BaseMeasure& m) {
    double v = 0.0;
    for (const auto& w : d.support) {
        v += m.integrate(
            [&](double x) {
                const double s = std::sqrt(d.phi(x)) - 1.0;
                return s * s;
            },
            w, BaseMeasure::kDefaultTol, d.breakpoints);
    }
    return v;
}

// (T_*)'(omega) as the absolutely convergent product
//   e^{-int (T'-1) dmu} * prod_{x in omega} T'(x).
// Requires ||T'-1||_1 finite; the product needs omega to cover the support.
inline double rn_suspension(const NsMap& t, const PointConfig& cfg, const BaseMeasure& m) {
    const NormResult a1 = aut1_deficiency(t, m);
    if (a1.divergent) {
        throw std::invalid_argument("rn_suspension: ||T'-1||_1 diverges for " + t.label);
    }
    if (t.rn_support && !cfg.window.contains(*t.rn_support)) {
        throw std::invalid_argument("rn_suspension: configuration does not cover the support");
    }
    const double chi_t = chi(t, m);
    double log_prod = 0.0;
    for (double x : cfg.points) log_prod += std::log(t.rn_derivative(x));
    return std::exp(-chi_t + log_prod);
}

struct StabilizedValue {
    double value = 0.0;
    double error_estimate = 0.0;  // last increment of the eps schedule
    std::vector<double> partials;
};

inline std::vector<double> default_eps_schedule() {
    std::vector<double> eps;
    for (int k = 1; k <= 20; ++k) eps.push_back(std::pow(2.0, -k));
    return eps;
}

// Stochastic integral I_mu(f): truncated compensated sums
//   int_{|f|>eps} f domega - int_{|f|>eps} f 1_{|f|<=1} dmu
// stabilized over a decreasing eps schedule (three consecutive increments
// below tol). One configuration is filtered for every eps, so the per-path
// limit is monotone in information.
inline StabilizedValue stochastic_integral(const RealFn& f, const std::vector<Window>& f_support,
                                           const std::vector<double>& f_breakpoints,
                                           const PointConfig& cfg, const BaseMeasure& m,
                                           const std::vector<double>& eps_schedule,
                                           double tol = 1e-9) {
    StabilizedValue out;
    double prev = 0.0;
    int stable_steps = 0;
    for (std::size_t i = 0; i < eps_schedule.size(); ++i) {
        const double eps = eps_schedule[i];
        double point_sum = 0.0;
        for (double x : cfg.points) {
            const double v = f(x);
            if (std::abs(v) > eps) point_sum += v;
        }
        double compensator = 0.0;
        for (const auto& w : f_support) {
            std::vector<double> brk(f_breakpoints);
            auto absf = [&](double x) { return std::abs(f(x)); };
            for (double lv : {eps, 1.0}) {
                const auto cr = level_crossings(absf, w.lo, w.hi, lv, 512);
                brk.insert(brk.end(), cr.begin(), cr.end());
            }
            compensator += m.integrate(
                [&](double x) {
                    const double v = f(x);
                    return (std::abs(v) > eps && std::abs(v) <= 1.0) ? v : 0.0;
                },
                w, BaseMeasure::kDefaultTol, brk);
        }
        const double val = point_sum - compensator;
        out.partials.push_back(val);
        if (i > 0) {
            const double inc = std::abs(val - prev);
            stable_steps = inc < tol ? stable_steps + 1 : 0;
            out.error_estimate = inc;
        }
        prev = val;
        out.value = val;
        if (stable_steps >= 3) return out;
    }
    throw NumericFailure("stochastic integral did not stabilize; partials " +
                             detail::format_tail(out.partials),
                         out.error_estimate);
}

// log (d nu*/d mu*)(omega) via the truncated limit
//   lim_eps ( int_{X_eps} log phi domega - int_{X_eps} (phi - 1) dmu ).
inline StabilizedValue log_rn_limit(const DensityRatio& d, const PointConfig& cfg,
                                    const BaseMeasure& m, const std::vector<double>& eps_schedule,
                                    double tol = 1e-9) {
    StabilizedValue out;
    double prev = 0.0;
    int stable_steps = 0;
    for (std::size_t i = 0; i < eps_schedule.size(); ++i) {
        const double eps = eps_schedule[i];
        double point_sum = 0.0;
        for (double x : cfg.points) {
            const double lp = d.log_phi(x);
            if (std::abs(lp) > eps) point_sum += lp;
        }
        const double compensator = detail::integrate_on_eps_region(
            d, m, [&](double x) { return d.phi(x) - 1.0; }, eps);
        const double val = point_sum - compensator;
        out.partials.push_back(val);
        if (i > 0) {
            const double inc = std::abs(val - prev);
            stable_steps = inc < tol ? stable_steps + 1 : 0;
            out.error_estimate = inc;
        }
        prev = val;
        out.value = val;
        if (stable_steps >= 3) return out;
    }
    throw NumericFailure("log RN limit did not stabilize; partials " +
                             detail::format_tail(out.partials),
                         out.error_estimate);
}

// Repeated-evaluation form of log_rn_limit: the eps-region compensators
// depend only on the schedule, so they are integrated once and every path
// pays only the point filter.
class LogRnSampler {
public:
    LogRnSampler(const DensityRatio& d, const BaseMeasure& m,
                 std::vector<double> eps_schedule = default_eps_schedule(), double tol = 1e-9)
        : ratio_(d), eps_(std::move(eps_schedule)), tol_(tol) {
        for (double eps : eps_) {
            compensators_.push_back(detail::integrate_on_eps_region(
                d, m, [&](double x) { return d.phi(x) - 1.0; }, eps));
        }
    }

    double eval(const PointConfig& cfg) const {
        double prev = 0.0;
        double last_inc = 0.0;
        int stable_steps = 0;
        for (std::size_t i = 0; i < eps_.size(); ++i) {
            double point_sum = 0.0;
            for (double x : cfg.points) {
                const double lp = ratio_.log_phi(x);
                if (std::abs(lp) > eps_[i]) point_sum += lp;
            }
            const double val = point_sum - compensators_[i];
            if (i > 0) {
                last_inc = std::abs(val - prev);
                stable_steps = last_inc < tol_ ? stable_steps + 1 : 0;
            }
            prev = val;
            if (stable_steps >= 3) return val;
        }
        throw NumericFailure("log RN limit did not stabilize over the eps schedule", last_inc);
    }

private:
    DensityRatio ratio_;
    std::vector<double> eps_;
    std::vector<double> compensators_;
    double tol_;
};

// Same precomputation for the raw stochastic integral of a fixed profile f.
class StochasticIntegralSampler {
public:
    StochasticIntegralSampler(RealFn f, const std::vector<Window>& support,
                              const std::vector<double>& breakpoints, const BaseMeasure& m,
                              std::vector<double> eps_schedule = default_eps_schedule(),
                              double tol = 1e-9)
        : f_(std::move(f)), eps_(std::move(eps_schedule)), tol_(tol) {
        for (double eps : eps_) {
            double comp = 0.0;
            for (const auto& w : support) {
                std::vector<double> brk(breakpoints);
                auto absf = [&](double x) { return std::abs(f_(x)); };
                for (double lv : {eps, 1.0}) {
                    const auto cr = level_crossings(absf, w.lo, w.hi, lv, 512);
                    brk.insert(brk.end(), cr.begin(), cr.end());
                }
                comp += m.integrate(
                    [&](double x) {
                        const double v = f_(x);
                        return (std::abs(v) > eps && std::abs(v) <= 1.0) ? v : 0.0;
                    },
                    w, BaseMeasure::kDefaultTol, brk);
            }
            compensators_.push_back(comp);
        }
    }

    double eval(const PointConfig& cfg) const {
        double prev = 0.0;
        double last_inc = 0.0;
        int stable_steps = 0;
        for (std::size_t i = 0; i < eps_.size(); ++i) {
            double point_sum = 0.0;
            for (double x : cfg.points) {
                const double v = f_(x);
                if (std::abs(v) > eps_[i]) point_sum += v;
            }
            const double val = point_sum - compensators_[i];
            if (i > 0) {
                last_inc = std::abs(val - prev);
                stable_steps = last_inc < tol_ ? stable_steps + 1 : 0;
            }
            prev = val;
            if (stable_steps >= 3) return val;
        }
        throw NumericFailure("stochastic integral did not stabilize over the eps schedule",
                             last_inc);
    }

private:
    RealFn f_;
    std::vector<double> eps_;
    std::vector<double> compensators_;
    double tol_;
};

// beta = -int (phi - 1 - log phi * 1_{|log phi| <= 1}) dmu, computed with the
// split integrand
//   (sqrt phi - 1)^2 + 2(sqrt phi - 1 - log sqrt phi) 1_{|log phi|<=1}
//                    + 2(sqrt phi - 1) 1_{|log phi|>1}
// whose three parts are individually integrable.
inline double beta_shift(const DensityRatio& d, const BaseMeasure& m) {
    double acc = 0.0;
    for (const auto& w : d.support) {
        std::vector<double> brk(d.breakpoints);
        auto logabs = [&](double x) { return std::abs(d.log_phi(x)); };
        const auto cr = level_crossings(logabs, w.lo, w.hi, 1.0, 512);
        brk.insert(brk.end(), cr.begin(), cr.end());
        acc += m.integrate(
            [&](double x) {
                const double phi = d.phi(x);
                const double s = std::sqrt(phi) - 1.0;
                const bool small_log = std::abs(std::log(phi)) <= 1.0;
                double v = s * s;
                if (small_log) {
                    v += 2.0 * (s - 0.5 * std::log(phi));
                } else {
                    v += 2.0 * s;
                }
                return v;
            },
            w, BaseMeasure::kDefaultTol, brk);
    }
    return -acc;
}

// Mean of log(d nu*/d mu*): -int (phi - 1 - log phi) dmu in [-inf, 0].
inline double expected_log_rn(const DensityRatio& d, const BaseMeasure& m,
                              double ceiling = 1e6) {
    double acc = 0.0;
    for (const auto& w : d.support) {
        acc += m.integrate(
            [&](double x) {
                const double phi = d.phi(x);
                return phi - 1.0 - std::log(phi);
            },
            w, BaseMeasure::kDefaultTol, d.breakpoints);
        if (acc > ceiling) return -std::numeric_limits<double>::infinity();
    }
    return -acc;
}

// Exp(phi - 1)(omega), the Radon-Nikodym derivative d nu*/d mu* evaluated
// through the extended coherent route e^{-||sqrt(phi)-1||^2} Exp(sqrt(phi)-1)^2.
// `norm2sq` and `sqrt_integral` are int (sqrt phi - 1)^2 dmu and
// int (sqrt phi - 1) dmu, precomputed by the caller for hot loops.
inline double exp_phi_minus_1(const DensityRatio& d, const PointConfig& cfg, double norm2sq,
                              double sqrt_integral) {
    double log_abs = -norm2sq - 2.0 * sqrt_integral;
    for (double x : cfg.points) {
        const double s = std::sqrt(d.phi(x));
        if (s == 0.0) return 0.0;
        log_abs += 2.0 * std::log(s);
    }
    return std::exp(log_abs);
}

struct RnConsistencyRow {
    Window window{0.0, 1.0};
    double nu_mass = 0.0;
    double reweighted_void = 0.0;  // E_mu*[Exp(phi-1) 1_{N_A = 0}]
    double direct_void = 0.0;      // empirical nu*-void probability
    double reweighted_count = 0.0; // E_mu*[Exp(phi-1) N_A]
    double se_reweighted = 0.0;
    double se_direct = 0.0;
    double se_count = 0.0;
    double z_reweighted = 0.0;
    double z_direct = 0.0;
    double z_count = 0.0;
    bool pass = false;
};

struct RnConsistencyReport {
    std::vector<RnConsistencyRow> rows;
    bool pass = true;
};

// Checks that reweighting by Exp(phi - 1) reproduces nu* statistics: void
// probabilities e^{-nu(A)} (also sampled directly from the nu-intensity
// process) and count intensities nu(A).
inline RnConsistencyReport rn_consistency_test(const DensityRatio& d,
                                               const std::vector<Window>& windows,
                                               std::uint64_t trials, std::uint64_t master_seed,
                                               const BaseMeasure& m) {
    Window hull = d.support_hull();
    for (const auto& w : windows) hull = Window::hull(hull, w);

    const double norm2sq = sqrt_phi_minus_1_norm2sq(d, m);
    double sqrt_integral = 0.0;
    for (const auto& w : d.support) {
        sqrt_integral += m.integrate([&](double x) { return std::sqrt(d.phi(x)) - 1.0; }, w,
                                     BaseMeasure::kDefaultTol, d.breakpoints);
    }

    ConfigSampler mu_sampler(m, hull);
    const BaseMeasure nu = nu_measure(d, m, hull);
    NuConfigSampler nu_sampler(d, m, hull);

    std::vector<RunningMoments> reweighted_void(windows.size());
    std::vector<RunningMoments> reweighted_count(windows.size());
    std::vector<std::uint64_t> direct_voids(windows.size(), 0);
    for (std::uint64_t t = 0; t < trials; ++t) {
        Stream rng_mu(master_seed, t);
        const PointConfig cfg = mu_sampler.sample(rng_mu);
        const double weight = exp_phi_minus_1(d, cfg, norm2sq, sqrt_integral);
        Stream rng_nu(master_seed ^ 0xABCD1234u, t);
        const PointConfig nu_cfg = nu_sampler.sample(rng_nu);
        for (std::size_t i = 0; i < windows.size(); ++i) {
            const std::size_t n = cfg.count(windows[i]);
            reweighted_void[i].add(n == 0 ? weight : 0.0);
            reweighted_count[i].add(weight * static_cast<double>(n));
            direct_voids[i] += nu_cfg.count(windows[i]) == 0 ? 1 : 0;
        }
    }

    RnConsistencyReport rep;
    for (std::size_t i = 0; i < windows.size(); ++i) {
        RnConsistencyRow row;
        row.window = windows[i];
        row.nu_mass = nu.mass(windows[i]);
        const double target_void = std::exp(-row.nu_mass);
        row.reweighted_void = reweighted_void[i].mean();
        row.se_reweighted = reweighted_void[i].se_mean();
        row.z_reweighted = row.se_reweighted > 0.0
                               ? (row.reweighted_void - target_void) / row.se_reweighted
                               : 0.0;
        row.direct_void = static_cast<double>(direct_voids[i]) / static_cast<double>(trials);
        row.se_direct = std::sqrt(target_void * (1.0 - target_void) / static_cast<double>(trials));
        row.z_direct = row.se_direct > 0.0 ? (row.direct_void - target_void) / row.se_direct : 0.0;
        row.reweighted_count = reweighted_count[i].mean();
        row.se_count = reweighted_count[i].se_mean();
        row.z_count = row.se_count > 0.0
                          ? (row.reweighted_count - row.nu_mass) / row.se_count
                          : 0.0;
        row.pass = std::abs(row.z_reweighted) <= 4.0 && std::abs(row.z_direct) <= 4.0 &&
                   std::abs(row.z_count) <= 4.0;
        rep.pass = rep.pass && row.pass;
        rep.rows.push_back(row);
    }
    return rep;
}

}  // namespace poissonlab
