#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "poissonlab/measure.hpp"
#include "poissonlab/nsmap.hpp"
#include "poissonlab/process.hpp"
#include "poissonlab/rng.hpp"
#include "poissonlab/suspension.hpp"

namespace poissonlab {

// Generating probability on Z with finite support.
struct KappaMeasure {
    std::vector<std::pair<long, double>> atoms;
    bool symmetric = false;

    void validate() const {
        double total = 0.0;
        for (const auto& [g, w] : atoms) {
            (void)g;
            if (!(w > 0.0)) throw std::invalid_argument("kappa: weights must be positive");
            total += w;
        }
        if (std::abs(total - 1.0) > 1e-12) {
            throw std::invalid_argument("kappa: weights must sum to 1");
        }
        if (symmetric) {
            for (const auto& [g, w] : atoms) {
                double w_neg = 0.0;
                for (const auto& [h, v] : atoms) {
                    if (h == -g) w_neg = v;
                }
                if (std::abs(w - w_neg) > 1e-12) {
                    throw std::invalid_argument("kappa: symmetric flag but weights are not even");
                }
            }
        }
    }

    static KappaMeasure symmetric_pair() { return {{{1, 0.5}, {-1, 0.5}}, true}; }
    static KappaMeasure dirac(long g) { return {{{g, 1.0}}, false}; }
};

struct EntropyTerm {
    long g = 0;
    double kappa_weight = 0.0;
    double integral = 0.0;  // int (T_g' - 1 - log T_g') dmu >= 0
};

struct EntropyResult {
    double value = 0.0;
    bool divergent = false;
    std::vector<EntropyTerm> terms;
};

// Furstenberg kappa-entropy of the suspension:
//   h = sum_g kappa(g) int (T_g' - 1 - log T_g') dmu.
// Zero exactly when every T_g preserves mu; scales linearly under mu -> t mu.
inline EntropyResult entropy(const ActionZ& a, const KappaMeasure& kappa, const BaseMeasure& m,
                             double ceiling = 1e6) {
    kappa.validate();
    EntropyResult res;
    for (const auto& [g, weight] : kappa.atoms) {
        const NsMap t = a.iterate(g);
        const WindowSchedule schedule = default_schedule(t);
        EntropyTerm term;
        term.g = g;
        term.kappa_weight = weight;
        for (const auto& w : schedule.windows) {
            term.integral += m.integrate(
                [&](double x) {
                    const double td = t.rn_derivative(x);
                    return td - 1.0 - std::log(td);
                },
                w, BaseMeasure::kDefaultTol, t.breakpoints);
            if (term.integral > ceiling) {
                res.divergent = true;
            }
        }
        res.value += weight * term.integral;
        res.terms.push_back(term);
    }
    return res;
}

// L1-form of the entropy: sum_g kappa(g) (chi(T_g) - int log T_g' dmu). With a
// symmetric kappa or conservative generators the chi terms cancel.
inline double entropy_aut1_form(const ActionZ& a, const KappaMeasure& kappa, const BaseMeasure& m,
                                bool conservative_members = false) {
    kappa.validate();
    double h = 0.0;
    for (const auto& [g, weight] : kappa.atoms) {
        const NsMap t = a.iterate(g);
        const WindowSchedule schedule = default_schedule(t);
        const NormResult a1 = aut1_deficiency(t, m, schedule);
        if (a1.divergent) {
            throw std::invalid_argument("entropy_aut1_form: iterate outside the L1 class");
        }
        double log_term = 0.0;
        for (const auto& w : schedule.windows) {
            log_term += m.integrate([&](double x) { return std::log(t.rn_derivative(x)); }, w,
                                    BaseMeasure::kDefaultTol, t.breakpoints);
        }
        const bool drop_chi = conservative_members || kappa.symmetric;
        const double chi_term = drop_chi ? 0.0 : chi(t, m, schedule);
        h += weight * (chi_term - log_term);
    }
    // with a symmetric kappa the chi terms cancel pairwise, so dropping them
    // is exact rather than an approximation
    return h;
}

struct DissipativityReport {
    std::vector<long> g;
    std::vector<double> norm_sq;   // ||c_T(g)||_2^2
    std::vector<double> term;      // e^{-norm_sq/2}
    std::vector<double> partial;   // running sum over the listed g
    bool summable_verdict = false; // tail increments below threshold
    double last_increment = 0.0;
};

// Partial sums of sum_g e^{-||c_T(g)||^2/2} over g = 0, +-1, ..., +-g_max
// (counting measure on Z). Generic over the squared-norm profile so the
// product constructions can reuse it.
inline DissipativityReport dissipativity_partial_sums(
    const std::function<double(long)>& norm_sq_fn, long g_max,
    double increment_threshold = 1e-12) {
    DissipativityReport rep;
    double sum = 0.0;
    auto visit = [&](long s) {
        const double n2 = norm_sq_fn(s);
        const double term = std::exp(-0.5 * n2);
        sum += term;
        rep.g.push_back(s);
        rep.norm_sq.push_back(n2);
        rep.term.push_back(term);
        rep.partial.push_back(sum);
        rep.last_increment = term;
    };
    for (long g = 0; g <= g_max; ++g) {
        visit(g);
        if (g != 0) visit(-g);
    }
    rep.summable_verdict = rep.last_increment < increment_threshold;
    return rep;
}

inline DissipativityReport dissipativity_score(const ActionZ& a, long g_max, const BaseMeasure& m,
                                               double increment_threshold = 1e-12) {
    return dissipativity_partial_sums(
        [&](long g) {
            const double n = cocycle_norm(a, g, m);
            return n * n;
        },
        g_max, increment_threshold);
}

struct ZeroTypeRow {
    long g = 0;
    double norm = 0.0;          // ||c_T(g)||_2
    double envelope = 0.0;      // min over |h| >= |g| of the norms
    double koopman_mc = 0.0;    // MC mean of sqrt((T_g*)') ~ e^{-norm^2/2}
    double koopman_target = 0.0;
    double koopman_se = 0.0;
    double koopman_z = 0.0;
};

// Cocycle growth profile: unbounded norms rule out an invariant probability,
// properness is the zero-type diagnostic. The Koopman column verifies
// <U_{(T_g)_*} 1, 1> = e^{-||c(g)||^2/2} by Monte Carlo.
inline std::vector<ZeroTypeRow> zero_type_profile(const ActionZ& a, long g_max,
                                                  const BaseMeasure& m, std::uint64_t mc_trials = 0,
                                                  std::uint64_t master_seed = 1) {
    std::vector<ZeroTypeRow> rows;
    for (long g = -g_max; g <= g_max; ++g) {
        ZeroTypeRow row;
        row.g = g;
        row.norm = cocycle_norm(a, g, m);
        row.koopman_target = std::exp(-0.5 * row.norm * row.norm);
        if (mc_trials > 0 && g != 0) {
            const NsMap t = a.iterate(g);
            const Window support = t.rn_support ? *t.rn_support : Window(-1.0, 1.0);
            ConfigSampler sampler(m, support);
            const double chi_t = chi(t, m);
            RunningMoments stat;
            for (std::uint64_t k = 0; k < mc_trials; ++k) {
                Stream rng(master_seed + static_cast<std::uint64_t>(g + g_max), k);
                const PointConfig cfg = sampler.sample(rng);
                double log_prod = 0.0;
                for (double x : cfg.points) log_prod += std::log(t.rn_derivative(x));
                stat.add(std::exp(0.5 * (-chi_t + log_prod)));
            }
            row.koopman_mc = stat.mean();
            row.koopman_se = stat.se_mean();
            row.koopman_z = row.koopman_se > 0.0
                                ? (row.koopman_mc - row.koopman_target) / row.koopman_se
                                : 0.0;
        } else {
            row.koopman_mc = row.koopman_target;
        }
        rows.push_back(row);
    }
    // monotone envelope from the outside in
    double best_pos = std::numeric_limits<double>::infinity();
    for (long g = g_max; g >= 0; --g) {
        const std::size_t ip = static_cast<std::size_t>(g + g_max);
        const std::size_t in = static_cast<std::size_t>(-g + g_max);
        best_pos = std::min({best_pos, rows[ip].norm, rows[in].norm});
        rows[ip].envelope = best_pos;
        rows[in].envelope = best_pos;
    }
    return rows;
}

struct StationarityReport {
    double defect = 0.0;      // max_A |sum_g kappa(g) mu(T_g A) - mu(A)|
    double jensen_gap = 0.0;  // max_A (sum_g kappa(g) e^{-mu(T_g A)} - e^{-sum_g kappa(g) mu(T_g A)})
    double empirical_gap_z = 0.0;
    bool measure_preserving = false;
};

// Stationarity holds exactly when the suspension preserves mu*: the defect is
// the intensity mismatch, the Jensen gap the strict-convexity witness on void
// probabilities. An empirical void probability under the kappa-mixture
// cross-checks the gap.
inline StationarityReport stationarity_defect(const ActionZ& a, const KappaMeasure& kappa,
                                              const BaseMeasure& m,
                                              const std::vector<Window>& windows,
                                              std::uint64_t trials, std::uint64_t master_seed,
                                              double tol = 1e-9) {
    kappa.validate();
    StationarityReport rep;
    const Window* worst = nullptr;
    for (const auto& w : windows) {
        const double base_mass = m.mass(w);
        double mixed_mass = 0.0;
        double mixed_void = 0.0;
        for (const auto& [g, weight] : kappa.atoms) {
            const NsMap t = a.iterate(g);
            const double im_mass = image_mass(t, m, w);
            mixed_mass += weight * im_mass;
            mixed_void += weight * std::exp(-im_mass);
        }
        const double defect = std::abs(mixed_mass - base_mass);
        if (defect > rep.defect) {
            rep.defect = defect;
            worst = &w;
        }
        // strict convexity: equality in Jensen iff the image masses coincide
        // across the kappa atoms
        rep.jensen_gap = std::max(rep.jensen_gap, mixed_void - std::exp(-mixed_mass));
    }
    rep.measure_preserving = rep.defect <= tol;

    if (trials > 0 && worst != nullptr) {
        // empirical void probability of the worst window under the mixture
        std::vector<double> cum;
        double c = 0.0;
        for (const auto& [g, weight] : kappa.atoms) {
            (void)g;
            c += weight;
            cum.push_back(c);
        }
        std::vector<double> masses;
        for (const auto& [g, weight] : kappa.atoms) {
            (void)weight;
            masses.push_back(image_mass(a.iterate(g), m, *worst));
        }
        RunningMoments stat;
        for (std::uint64_t t = 0; t < trials; ++t) {
            Stream rng(master_seed, t);
            const double u = rng.u01();
            std::size_t pick = 0;
            while (pick + 1 < cum.size() && u > cum[pick]) ++pick;
            stat.add(rng.poisson(masses[pick]) == 0 ? 1.0 : 0.0);
        }
        double mixed_void = 0.0;
        for (std::size_t i = 0; i < kappa.atoms.size(); ++i) {
            mixed_void += kappa.atoms[i].second * std::exp(-masses[i]);
        }
        rep.empirical_gap_z =
            stat.se_mean() > 0.0 ? (stat.mean() - mixed_void) / stat.se_mean() : 0.0;
    }
    return rep;
}

}  // namespace poissonlab
