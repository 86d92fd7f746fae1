#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "poissonlab/measure.hpp"
#include "poissonlab/numeric.hpp"

namespace poissonlab {

// Levy data of a compensated Poisson functional: the jump profile is f (raw
// stochastic integral) or log phi (log RN derivative, with drift beta). The
// Levy measure itself is the pushforward of mu by the jump profile; all
// integrals below are taken in the x-variable against mu.
struct LevyData {
    const BaseMeasure* base = nullptr;
    RealFn jump;
    std::vector<Window> support;      // jump == 0 outside
    std::vector<double> breakpoints;
    double drift_beta = 0.0;          // 0 for raw I_mu(f)
    std::string label;
};

// int (jump^2 and 1) dmu, the Levy integrability certificate.
inline double levy_integrability(const LevyData& l, double tol = BaseMeasure::kDefaultTol) {
    double acc = 0.0;
    for (const auto& w : l.support) {
        std::vector<double> brk(l.breakpoints);
        auto absj = [&](double x) { return std::abs(l.jump(x)); };
        const auto cr = level_crossings(absj, w.lo, w.hi, 1.0, 512);
        brk.insert(brk.end(), cr.begin(), cr.end());
        acc += l.base->integrate(
            [&](double x) {
                const double v = l.jump(x);
                return std::min(v * v, 1.0);
            },
            w, tol, brk);
    }
    return acc;
}

// E[e^{iaX}] = exp( ia beta + int (e^{ia jump} - 1 - ia jump 1_{|jump|<=1}) dmu ).
inline std::complex<double> char_fn_analytic(const LevyData& l, double a, double tol = 1e-9) {
    if (l.base == nullptr) throw std::invalid_argument("char_fn_analytic: missing base measure");
    std::complex<double> expo(0.0, a * l.drift_beta);
    for (const auto& w : l.support) {
        std::vector<double> brk(l.breakpoints);
        auto absj = [&](double x) { return std::abs(l.jump(x)); };
        const auto cr = level_crossings(absj, w.lo, w.hi, 1.0, 512);
        brk.insert(brk.end(), cr.begin(), cr.end());
        const double re = l.base->integrate(
            [&](double x) { return std::cos(a * l.jump(x)) - 1.0; }, w, tol, brk);
        const double im = l.base->integrate(
            [&](double x) {
                const double v = l.jump(x);
                return std::sin(a * v) - (std::abs(v) <= 1.0 ? a * v : 0.0);
            },
            w, tol, brk);
        expo += std::complex<double>(re, im);
    }
    return std::exp(expo);
}

struct EmpiricalCharFn {
    std::complex<double> value;
    double se_re = 0.0;
    double se_im = 0.0;
};

inline EmpiricalCharFn char_fn_empirical(const std::vector<double>& samples, double a) {
    if (samples.empty()) throw std::invalid_argument("char_fn_empirical: no samples");
    RunningMoments re, im;
    for (double s : samples) {
        re.add(std::cos(a * s));
        im.add(std::sin(a * s));
    }
    EmpiricalCharFn out;
    out.value = {re.mean(), im.mean()};
    out.se_re = re.se_mean();
    out.se_im = im.se_mean();
    return out;
}

struct CharFnGridRow {
    double a = 0.0;
    std::complex<double> analytic;
    std::complex<double> empirical;
    double se_re = 0.0;
    double se_im = 0.0;
    double z_re = 0.0;
    double z_im = 0.0;
    bool pass = false;
};

inline std::vector<CharFnGridRow> char_fn_grid_check(const LevyData& l,
                                                     const std::vector<double>& samples,
                                                     int grid_points = 25, double a_max = 3.0) {
    std::vector<CharFnGridRow> rows;
    for (int i = 0; i < grid_points; ++i) {
        const double a = -a_max + 2.0 * a_max * i / (grid_points - 1);
        CharFnGridRow row;
        row.a = a;
        row.analytic = char_fn_analytic(l, a);
        const EmpiricalCharFn emp = char_fn_empirical(samples, a);
        row.empirical = emp.value;
        row.se_re = emp.se_re;
        row.se_im = emp.se_im;
        row.z_re = emp.se_re > 0.0 ? (row.empirical.real() - row.analytic.real()) / emp.se_re : 0.0;
        row.z_im = emp.se_im > 0.0 ? (row.empirical.imag() - row.analytic.imag()) / emp.se_im : 0.0;
        row.pass = std::abs(row.z_re) <= 4.0 && std::abs(row.z_im) <= 4.0;
        rows.push_back(row);
    }
    return rows;
}

struct IdMeanReport {
    double analytic_mean = 0.0;  // int_{|jump| > 1} jump dmu + drift
    double sample_mean = 0.0;
    double se = 0.0;
    double z = 0.0;
    bool pass = false;
};

// E[X] = int_{|jump|>1} jump dmu (+ drift), against the sample mean.
inline IdMeanReport id_mean_check(const LevyData& l, const std::vector<double>& samples) {
    double big_jump_mean = 0.0;
    for (const auto& w : l.support) {
        std::vector<double> brk(l.breakpoints);
        auto absj = [&](double x) { return std::abs(l.jump(x)); };
        const auto cr = level_crossings(absj, w.lo, w.hi, 1.0, 512);
        brk.insert(brk.end(), cr.begin(), cr.end());
        big_jump_mean += l.base->integrate(
            [&](double x) {
                const double v = l.jump(x);
                return std::abs(v) > 1.0 ? v : 0.0;
            },
            w, BaseMeasure::kDefaultTol, brk);
    }
    RunningMoments stat;
    for (double s : samples) stat.add(s);
    IdMeanReport rep;
    rep.analytic_mean = big_jump_mean + l.drift_beta;
    rep.sample_mean = stat.mean();
    rep.se = stat.se_mean();
    rep.z = rep.se > 0.0 ? (rep.sample_mean - rep.analytic_mean) / rep.se : 0.0;
    rep.pass = std::abs(rep.z) <= 4.0;
    return rep;
}

// Infinite-divisibility probe: the analytic characteristic function under
// mu/k must be the k-th root of the full one, with the complex root branch
// tracked by continuity from a = 0.
inline double divisibility_probe_residual(const LevyData& l, int k, int grid_points = 25,
                                          double a_max = 3.0) {
    if (k < 2) throw std::invalid_argument("divisibility probe: k >= 2");
    const BaseMeasure scaled = l.base->scaled(1.0 / k);
    LevyData lk = l;
    lk.base = &scaled;
    lk.drift_beta = l.drift_beta / k;

    double worst = 0.0;
    double phase_prev = 0.0;  // unwrapped phase of the full char fn at previous a
    for (int i = 0; i < grid_points; ++i) {
        const double a = a_max * i / (grid_points - 1);  // track from a=0 upward
        const std::complex<double> full = char_fn_analytic(l, a);
        const std::complex<double> part = char_fn_analytic(lk, a);
        double phase = std::arg(full);
        while (phase - phase_prev > M_PI) phase -= 2.0 * M_PI;
        while (phase - phase_prev < -M_PI) phase += 2.0 * M_PI;
        phase_prev = phase;
        const std::complex<double> root =
            std::pow(std::abs(full), 1.0 / k) * std::exp(std::complex<double>(0.0, phase / k));
        worst = std::max(worst, std::abs(part - root));
    }
    return worst;
}

}  // namespace poissonlab
