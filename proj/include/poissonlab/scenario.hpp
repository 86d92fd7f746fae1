#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "poissonlab/coherent.hpp"
#include "poissonlab/constructions.hpp"
#include "poissonlab/dynamics.hpp"
#include "poissonlab/infdiv.hpp"
#include "poissonlab/measure.hpp"
#include "poissonlab/nsmap.hpp"
#include "poissonlab/process.hpp"
#include "poissonlab/report.hpp"
#include "poissonlab/rng.hpp"
#include "poissonlab/suspension.hpp"

namespace poissonlab {

using json = nlohmann::ordered_json;

// Config problems exit with code 2; check failures with code 1.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace cfg {

inline void require_keys(const json& j, const std::set<std::string>& allowed,
                         const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (allowed.find(key) == allowed.end()) {
            throw ConfigError(where + ": unknown key '" + key + "'");
        }
    }
}

inline double number(const json& j, const std::string& key, const std::string& where) {
    if (!j.contains(key) || !j[key].is_number()) {
        throw ConfigError(where + ": missing numeric '" + key + "'");
    }
    return j[key].get<double>();
}

inline double number_or(const json& j, const std::string& key, double fallback) {
    return j.contains(key) ? j[key].get<double>() : fallback;
}

inline Window window(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 2) throw ConfigError(where + ": window must be [lo, hi]");
    return Window(j[0].get<double>(), j[1].get<double>());
}

inline BaseMeasure measure(const json& j) {
    if (j.is_null()) return lebesgue();
    require_keys(j, {"builder", "breaks", "values", "scale"}, "measure");
    const std::string builder = j.value("builder", "lebesgue");
    BaseMeasure m = [&]() {
        if (builder == "lebesgue") return lebesgue();
        if (builder == "weighted_line") return weighted_line();
        if (builder == "exp_decay") return exp_decay();
        if (builder == "piecewise") {
            if (!j.contains("breaks") || !j.contains("values")) {
                throw ConfigError("measure: piecewise needs 'breaks' and 'values'");
            }
            return piecewise_constant(j["breaks"].get<std::vector<double>>(),
                                      j["values"].get<std::vector<double>>());
        }
        throw ConfigError("measure: unknown builder '" + builder + "'");
    }();
    if (j.contains("scale")) m = m.scaled(j["scale"].get<double>());
    return m;
}

inline std::vector<std::pair<Window, double>> ratio_pieces(const json& j,
                                                           const std::string& where) {
    if (!j.is_array() || j.empty()) throw ConfigError(where + ": expected piece array");
    std::vector<std::pair<Window, double>> pieces;
    for (const auto& p : j) {
        require_keys(p, {"window", "phi"}, where);
        pieces.emplace_back(window(p["window"], where), number(p, "phi", where));
    }
    return pieces;
}

inline NsMap map(const json& j, const BaseMeasure& m) {
    require_keys(j, {"kind", "t", "a", "b", "pieces", "s"}, "map");
    const std::string kind = j.value("kind", "");
    if (kind == "identity") return identity_map();
    if (kind == "translation") return make_translation(number(j, "t", "map"), m);
    if (kind == "swap") {
        return make_swap(window(j["a"], "map.a"), window(j["b"], "map.b"), m);
    }
    if (kind == "density_step") {
        return make_density_map(ratio_pieces(j["pieces"], "map.pieces"), m);
    }
    if (kind == "scaling") return make_scaling(number(j, "s", "map"), m);
    throw ConfigError("map: unknown kind '" + kind + "'");
}

inline TestFunction function(const json& j, const BaseMeasure& m) {
    require_keys(j, {"kind", "height", "window", "pieces", "alpha", "hi"}, "function");
    const std::string kind = j.value("kind", "");
    if (kind == "indicator") {
        return indicator_fn(number(j, "height", "function"), window(j["window"], "function"), m);
    }
    if (kind == "hat") {
        return hat_fn(number(j, "height", "function"), window(j["window"], "function"), m);
    }
    if (kind == "bump") {
        return bump_fn(number(j, "height", "function"), window(j["window"], "function"), m);
    }
    if (kind == "step") {
        const auto pieces = ratio_pieces(j["pieces"], "function.pieces");
        Window hull = pieces.front().first;
        double integral = 0.0, norm2 = 0.0;
        std::vector<double> brk;
        for (const auto& [w, v] : pieces) {
            hull = Window::hull(hull, w);
            integral += v * m.mass(w);
            norm2 += v * v * m.mass(w);
            brk.push_back(w.lo);
            brk.push_back(w.hi);
        }
        auto fn = [pieces](double x) {
            for (const auto& [w, v] : pieces) {
                if (w.contains(x)) return v;
            }
            return 0.0;
        };
        return make_test_function(fn, hull, m, "step", integral, norm2, brk);
    }
    if (kind == "power_singular") {
        return power_singular_fn(number(j, "alpha", "function"), number(j, "hi", "function"), m);
    }
    throw ConfigError("function: unknown kind '" + kind + "'");
}

}  // namespace cfg

struct RunSettings {
    std::uint64_t seed = 0;
    double trials_scale = 1.0;
    bool dump_configs = false;

    std::uint64_t trials(const json& params, std::uint64_t fallback) const {
        const double t = cfg::number_or(params, "trials", static_cast<double>(fallback));
        return static_cast<std::uint64_t>(std::max(1.0, t * trials_scale));
    }
};

namespace checks {

// --- module process -------------------------------------------------------

inline void poisson_sampling(const json& params, const RunSettings& rs, Report& rep) {
    cfg::require_keys(params, {"check", "masses", "trials"}, "poisson_sampling");
    std::vector<double> masses{0.3, 1.0, std::log(2.0), 5.0};
    if (params.contains("masses")) masses = params["masses"].get<std::vector<double>>();
    const std::uint64_t trials = rs.trials(params, 100000);
    const BaseMeasure m = lebesgue();

    std::size_t mass_idx = 0;
    for (double mass : masses) {
        const Window w(0.0, mass);
        ConfigSampler sampler(m, w);
        RunningMoments counts;
        std::uint64_t voids = 0;
        CsvTable dump;
        dump.name = "configs_mass" + std::to_string(mass_idx++);
        dump.columns = {"trial_id", "point"};
        for (std::uint64_t t = 0; t < trials; ++t) {
            Stream rng(rs.seed + static_cast<std::uint64_t>(mass * 1e6), t);
            const PointConfig cfg = sampler.sample(rng);
            counts.add(static_cast<double>(cfg.size()));
            voids += cfg.size() == 0 ? 1 : 0;
            if (rs.dump_configs) {
                for (double x : cfg.points) {
                    dump.rows.push_back({static_cast<double>(t), x});
                }
            }
        }
        if (rs.dump_configs) rep.tables.push_back(std::move(dump));
        const std::string tag = "mass=" + std::to_string(mass);
        rep.records.push_back(CheckRecord::stochastic("poisson mean [" + tag + "]", counts.mean(),
                                                      mass, counts.se_mean()));
        rep.records.push_back(CheckRecord::stochastic("poisson variance [" + tag + "]",
                                                      counts.variance(), mass,
                                                      counts.se_variance()));
        const double void_target = std::exp(-mass);
        const double void_emp = static_cast<double>(voids) / static_cast<double>(trials);
        const double void_se =
            std::sqrt(void_target * (1.0 - void_target) / static_cast<double>(trials));
        rep.records.push_back(
            CheckRecord::stochastic("void probability [" + tag + "]", void_emp, void_target,
                                    void_se));
    }
}

inline void renyi_void(const json& params, const RunSettings& rs, Report& rep) {
    cfg::require_keys(params, {"check", "measure", "windows", "trials"}, "renyi_void");
    const BaseMeasure m = cfg::measure(params.contains("measure") ? params["measure"] : json());
    std::vector<Window> windows;
    if (params.contains("windows")) {
        for (const auto& w : params["windows"]) windows.push_back(cfg::window(w, "renyi_void"));
    } else {
        windows = {Window(0.0, std::log(2.0)), Window(1.0, 2.0), Window(2.5, 3.0)};
    }
    const std::uint64_t trials = rs.trials(params, 100000);
    const auto vr = renyi_void_check(m, windows, trials, rs.seed + 77);
    for (const auto& row : vr.rows) {
        rep.records.push_back(CheckRecord::stochastic(
            "void vs e^{-mass} [" + std::to_string(row.window.lo) + "," +
                std::to_string(row.window.hi) + ")",
            row.empirical, row.target, row.se));
    }
    const double jse = std::sqrt(vr.joint_target * (1.0 - vr.joint_target) /
                                 static_cast<double>(trials));
    rep.records.push_back(CheckRecord::stochastic("disjoint void independence", vr.joint_empirical,
                                                  vr.joint_target, jse));
}

// --- module coherent ------------------------------------------------------

inline std::vector<std::pair<TestFunction, TestFunction>> default_pair_battery(
    const BaseMeasure& m) {
    std::vector<std::pair<TestFunction, TestFunction>> battery;
    battery.emplace_back(indicator_fn(0.3, Window(0.0, 1.0), m),
                         indicator_fn(0.4, Window(0.5, 1.5), m));
    battery.emplace_back(hat_fn(0.5, Window(0.0, 2.0), m), indicator_fn(-0.3, Window(1.0, 2.0), m));
    battery.emplace_back(bump_fn(0.7, Window(-1.0, 1.0), m), bump_fn(0.4, Window(0.0, 1.0), m));
    battery.emplace_back(indicator_fn(-0.5, Window(0.0, 0.7), m),
                         hat_fn(-0.8, Window(0.0, 1.0), m));
    battery.emplace_back(indicator_fn(1.5, Window(2.0, 2.5), m),
                         indicator_fn(2.0, Window(2.0, 3.0), m));
    battery.emplace_back(hat_fn(1.0, Window(-2.0, 0.0), m), bump_fn(-0.6, Window(-1.0, 0.0), m));
    return battery;
}

inline void exponential_relation(const json& params, const RunSettings& rs, Report& rep) {
    cfg::require_keys(params, {"check", "trials"}, "exponential_relation");
    const BaseMeasure m = lebesgue();
    const std::uint64_t trials = rs.trials(params, 100000);
    const auto battery = default_pair_battery(m);
    for (std::size_t i = 0; i < battery.size(); ++i) {
        const auto est = inner_product_mc(battery[i].first, battery[i].second, trials,
                                          rs.seed + 1000 + i, m);
        rep.records.push_back(CheckRecord::stochastic(
            "<Exp f, Exp g> = e^{<f,g>} [pair " + std::to_string(i) + "]", est.estimate,
            est.target, est.se));
    }
}

inline std::vector<DensityRatio> default_ratio_battery() {
    std::vector<DensityRatio> out;
    out.push_back(make_step_ratio({{Window(0.0, 1.0), 2.0}}, "phi=2 on [0,1)"));
    out.push_back(make_step_ratio({{Window(0.0, 1.0), 0.5}, {Window(1.0, 2.0), 1.5}},
                                  "phi=0.5/1.5 steps"));
    out.push_back(make_step_ratio({{Window(0.0, 0.5), 3.0}, {Window(1.0, 2.0), 0.25}},
                                  "phi=3/0.25 steps"));
    return out;
}

inline void coherent_normalization(const json& params, const RunSettings& rs, Report& rep) {
    cfg::require_keys(params, {"check", "trials"}, "coherent_normalization");
    const BaseMeasure m = lebesgue();
    const std::uint64_t trials = rs.trials(params, 100000);
    const auto ratios = default_ratio_battery();
    for (std::size_t i = 0; i < ratios.size(); ++i) {
        const DensityRatio& d = ratios[i];
        const double norm2sq = sqrt_phi_minus_1_norm2sq(d, m);
        double sqrt_integral = 0.0;
        for (const auto& w : d.support) {
            sqrt_integral += m.integrate([&](double x) { return std::sqrt(d.phi(x)) - 1.0; }, w,
                                         BaseMeasure::kDefaultTol, d.breakpoints);
        }
        ConfigSampler sampler(m, d.support_hull());
        RunningMoments stat;
        for (std::uint64_t t = 0; t < trials; ++t) {
            Stream rng(rs.seed + 2000 + i, t);
            stat.add(exp_phi_minus_1(d, sampler.sample(rng), norm2sq, sqrt_integral));
        }
        rep.records.push_back(CheckRecord::stochastic("E[Exp(phi-1)] = 1 [" + d.label + "]",
                                                      stat.mean(), 1.0, stat.se_mean()));
    }
}

inline void abs_value_identity(const json& params, const RunSettings& rs, Report& rep) {
    cfg::require_keys(params, {"check", "paths"}, "abs_value_identity");
    const BaseMeasure m = lebesgue();
    const std::uint64_t paths = rs.trials(params.contains("paths")
                                              ? json{{"trials", params["paths"]}}
                                              : json::object(),
                                          1000);
    // profile dipping below -1 so the folded term is exercised
    const auto phi = cfg::function(
        json{{"kind", "step"},
             {"pieces", json::array({json{{"window", json::array({0.0, 0.5})}, {"phi", -2.0}},
                                     json{{"window", json::array({0.5, 1.0})}, {"phi", 0.5}},
                                     json{{"window", json::array({1.2, 1.8})}, {"phi", -1.5}}})}},
        m);
    AbsIdentityChecker checker(phi, m);
    ConfigSampler sampler(m, phi.support);
    double worst = 0.0;
    for (std::uint64_t t = 0; t < paths; ++t) {
        Stream rng(rs.seed + 3000, t);
        worst = std::max(worst, checker.check(sampler.sample(rng)).residual);
    }
    rep.records.push_back(
        CheckRecord::deterministic("abs coherent identity, worst path residual", worst, 0.0,
                                   1e-9));
}

inline void cone_preservation(const json& params, const RunSettings& rs, Report& rep) {
    cfg::require_keys(params, {"check", "functions", "measure", "map"}, "cone_preservation");
    const BaseMeasure m = cfg::measure(params.contains("measure") ? params["measure"] : json());
    const NsMap t = params.contains("map")
                        ? cfg::map(params["map"], m)
                        : make_swap(Window(0.0, 1.0), Window(1.0, 4.0), m);
    const int n_functions =
        static_cast<int>(cfg::number_or(params, "functions", 100));
    Stream rng(rs.seed + 4000, 0);
    int violations = 0;
    double min_val = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n_functions; ++i) {
        // random cone member: step function with values in [-1, 3]
        std::vector<std::pair<Window, double>> pieces;
        double lo = -1.0;
        const int n_pieces = 1 + static_cast<int>(rng.u01() * 3);
        for (int p = 0; p < n_pieces; ++p) {
            const double width = 0.3 + rng.u01();
            pieces.emplace_back(Window(lo, lo + width), -1.0 + 4.0 * rng.u01());
            lo += width + 0.1 * rng.u01();
        }
        Window hull = pieces.front().first;
        for (const auto& [w, v] : pieces) {
            (void)v;
            hull = Window::hull(hull, w);
        }
        auto fn = [pieces](double x) {
            for (const auto& [w, v] : pieces) {
                if (w.contains(x)) return v;
            }
            return 0.0;
        };
        std::vector<double> brk;
        for (const auto& [w, v] : pieces) {
            (void)v;
            brk.push_back(w.lo);
            brk.push_back(w.hi);
        }
        const TestFunction f = make_test_function(fn, hull, m, "random_cone", std::nullopt,
                                                  std::nullopt, brk);
        const TestFunction af = affine_apply(t, f, m);
        for (int k = 0; k <= 2048; ++k) {
            const double x =
                af.support.lo + (af.support.hi - af.support.lo) * k / 2048.0;
            const double v = af(x);
            min_val = std::min(min_val, v);
            if (v < -1.0) ++violations;
        }
    }
    rep.records.push_back(CheckRecord::gate(
        "affine image stays in the cone {f >= -1}", violations == 0, min_val,
        violations == 0 ? "min value " + std::to_string(min_val) : "violations found"));
}

// --- module suspension ----------------------------------------------------

inline void rn_identification(const json& params, const RunSettings& rs, Report& rep) {
    cfg::require_keys(params, {"check", "trials", "windows"}, "rn_identification");
    const BaseMeasure m = lebesgue();
    const std::uint64_t trials = rs.trials(params, 100000);
    std::vector<Window> windows{Window(0.0, 0.5), Window(0.5, 1.0), Window(0.0, 1.0),
                                Window(1.0, 2.0)};
    if (params.contains("windows")) {
        windows.clear();
        for (const auto& w : params["windows"]) {
            windows.push_back(cfg::window(w, "rn_identification"));
        }
    }
    const auto ratios = default_ratio_battery();
    for (std::size_t i = 0; i < ratios.size(); ++i) {
        const auto report = rn_consistency_test(ratios[i], windows, trials, rs.seed + 5000 + i, m);
        for (const auto& row : report.rows) {
            const std::string tag =
                ratios[i].label + ", A=[" + std::to_string(row.window.lo) + "," +
                std::to_string(row.window.hi) + ")";
            rep.records.push_back(CheckRecord::stochastic(
                "E[Exp(phi-1) 1_{N_A=0}] = e^{-nu(A)} [" + tag + "]", row.reweighted_void,
                std::exp(-row.nu_mass), row.se_reweighted));
            rep.records.push_back(CheckRecord::stochastic("direct nu* void probability [" + tag +
                                                              "]",
                                                          row.direct_void, std::exp(-row.nu_mass),
                                                          row.se_direct));
            rep.records.push_back(CheckRecord::stochastic("reweighted intensity = nu(A) [" + tag +
                                                              "]",
                                                          row.reweighted_count, row.nu_mass,
                                                          row.se_count));
        }
    }
}

inline void rn_cross_formula(const json& params, const RunSettings& rs, Report& rep) {
    cfg::require_keys(params, {"check", "paths"}, "rn_cross_formula");
    const std::uint64_t paths = rs.trials(params.contains("paths")
                                              ? json{{"trials", params["paths"]}}
                                              : json::object(),
                                          1000);
    struct Case {
        std::string name;
        BaseMeasure m;
        NsMap t;
    };
    std::vector<Case> cases;
    {
        BaseMeasure leb = lebesgue();
        cases.push_back({"density step phi=2", leb,
                         make_density_map({{Window(0.0, 1.0), 2.0}}, leb)});
        cases.push_back({"swap masses (1,2)", leb,
                         make_swap(Window(0.0, 1.0), Window(1.0, 3.0), leb)});
        BaseMeasure wl = weighted_line();
        cases.push_back({"translation on weighted line", wl, make_translation(1.0, wl)});
    }
    for (auto& c : cases) {
        const DensityRatio d = ratio_of_map(c.t);
        const double norm2sq = sqrt_phi_minus_1_norm2sq(d, c.m);
        double sqrt_integral = 0.0;
        for (const auto& w : d.support) {
            sqrt_integral += c.m.integrate([&](double x) { return std::sqrt(d.phi(x)) - 1.0; }, w,
                                           BaseMeasure::kDefaultTol, d.breakpoints);
        }
        const LogRnSampler logrn(d, c.m);
        const double chi_t = chi(c.t, c.m);
        ConfigSampler sampler(c.m, d.support_hull());
        double worst = 0.0;
        for (std::uint64_t t = 0; t < paths; ++t) {
            Stream rng(rs.seed + 6000, t);
            const PointConfig cfg = sampler.sample(rng);
            const double via_coherent = exp_phi_minus_1(d, cfg, norm2sq, sqrt_integral);
            const double via_limit = std::exp(logrn.eval(cfg));
            double log_prod = 0.0;
            for (double x : cfg.points) log_prod += std::log(c.t.rn_derivative(x));
            const double via_product = std::exp(-chi_t + log_prod);
            const double scale = std::max({via_coherent, via_limit, via_product, 1e-300});
            worst = std::max({worst, std::abs(via_coherent - via_limit) / scale,
                              std::abs(via_coherent - via_product) / scale,
                              std::abs(via_limit - via_product) / scale});
        }
        rep.records.push_back(CheckRecord::deterministic(
            "RN cross-formula agreement [" + c.name + "]", worst, 0.0, 1e-8));
    }
}

inline void expected_log_rn_check(const json& params, const RunSettings& rs, Report& rep) {
    cfg::require_keys(params, {"check", "trials"}, "expected_log_rn");
    const BaseMeasure m = lebesgue();
    const std::uint64_t trials = rs.trials(params, 20000);
    const DensityRatio d = make_step_ratio({{Window(0.0, 1.0), 2.0}}, "phi=2");
    const double analytic = expected_log_rn(d, m);
    rep.records.push_back(CheckRecord::deterministic("E[log RN] closed form (phi=2, mass 1)",
                                                     analytic, -(1.0 - std::log(2.0)), 1e-10));
    const LogRnSampler sampler_fn(d, m);
    ConfigSampler sampler(m, d.support_hull());
    RunningMoments stat;
    for (std::uint64_t t = 0; t < trials; ++t) {
        Stream rng(rs.seed + 7000, t);
        stat.add(sampler_fn.eval(sampler.sample(rng)));
    }
    rep.records.push_back(CheckRecord::stochastic("MC mean of log RN limit", stat.mean(), analytic,
                                                  stat.se_mean()));
    rep.records.push_back(
        CheckRecord::gate("E[log RN] <= 0", analytic <= 0.0, analytic));
}

// --- module infdiv --------------------------------------------------------

inline void infdiv_char(const json& params, const RunSettings& rs, Report& rep) {
    cfg::require_keys(params, {"check", "trials", "grid_points"}, "infdiv_char");
    const BaseMeasure m = lebesgue();
    const std::uint64_t trials = rs.trials(params, 100000);
    const int grid_points = static_cast<int>(cfg::number_or(params, "grid_points", 25));

    std::vector<DensityRatio> ratios;
    ratios.push_back(make_step_ratio({{Window(0.0, 1.0), 2.0}}, "phi=2"));
    ratios.push_back(make_step_ratio({{Window(0.0, 0.5), 3.0}, {Window(1.0, 2.0), 0.25}},
                                     "phi=3/0.25"));

    for (std::size_t i = 0; i < ratios.size(); ++i) {
        const DensityRatio& d = ratios[i];
        LevyData levy;
        levy.base = &m;
        levy.jump = [d](double x) { return d.log_phi(x); };
        levy.support = d.support;
        levy.breakpoints = d.breakpoints;
        levy.drift_beta = beta_shift(d, m);
        levy.label = d.label;

        const double integrability = levy_integrability(levy);
        rep.records.push_back(CheckRecord::gate(
            "Levy integrability finite [" + d.label + "]", std::isfinite(integrability),
            integrability));

        const LogRnSampler logrn(d, m);
        ConfigSampler sampler(m, d.support_hull());
        std::vector<double> samples;
        samples.reserve(trials);
        for (std::uint64_t t = 0; t < trials; ++t) {
            Stream rng(rs.seed + 8000 + i, t);
            samples.push_back(logrn.eval(sampler.sample(rng)));
        }

        const auto grid = char_fn_grid_check(levy, samples, grid_points, 3.0);
        CsvTable table;
        table.name = "char_fn_" + std::to_string(i);
        table.columns = {"a", "re_analytic", "im_analytic", "re_empirical", "im_empirical",
                         "se_re", "se_im"};
        int grid_failures = 0;
        double worst_z = 0.0;
        for (const auto& row : grid) {
            table.rows.push_back({row.a, row.analytic.real(), row.analytic.imag(),
                                  row.empirical.real(), row.empirical.imag(), row.se_re,
                                  row.se_im});
            if (!row.pass) ++grid_failures;
            worst_z = std::max({worst_z, std::abs(row.z_re), std::abs(row.z_im)});
        }
        rep.tables.push_back(std::move(table));
        rep.records.push_back(CheckRecord::gate(
            "char fn grid |z| <= 4 at " + std::to_string(grid.size()) + " points [" + d.label +
                "]",
            grid_failures == 0, worst_z, "worst |z|"));

        const auto mean_rep = id_mean_check(levy, samples);
        rep.records.push_back(CheckRecord::stochastic("mean of log RN [" + d.label + "]",
                                                      mean_rep.sample_mean, mean_rep.analytic_mean,
                                                      mean_rep.se));
        rep.records.push_back(CheckRecord::deterministic(
            "Levy mean equals -int(phi-1-log phi) [" + d.label + "]", mean_rep.analytic_mean,
            expected_log_rn(d, m), 1e-8));
        for (int k : {2, 3}) {
            rep.records.push_back(CheckRecord::deterministic(
                "divisibility probe k=" + std::to_string(k) + " [" + d.label + "]",
                divisibility_probe_residual(levy, k), 0.0, 1e-9));
        }
    }
}

inline void stochastic_integral_mean(const json& params, const RunSettings& rs, Report& rep) {
    cfg::require_keys(params, {"check", "trials"}, "stochastic_integral_mean");
    const BaseMeasure m = lebesgue();
    const std::uint64_t trials = rs.trials(params, 100000);

    struct Case {
        std::string name;
        std::vector<std::pair<Window, double>> pieces;
    };
    const std::vector<Case> cases{
        {"f = 0.8 1_{[0,1)}", {{Window(0.0, 1.0), 0.8}}},
        {"f = 3 1_{[0,1)}", {{Window(0.0, 1.0), 3.0}}},
        {"f = 2 1_{[0,0.5)} - 0.5 1_{[1,2)}", {{Window(0.0, 0.5), 2.0}, {Window(1.0, 2.0), -0.5}}},
    };
    std::size_t case_idx = 0;
    for (const auto& c : cases) {
        auto fn = [pieces = c.pieces](double x) {
            for (const auto& [w, v] : pieces) {
                if (w.contains(x)) return v;
            }
            return 0.0;
        };
        std::vector<Window> support;
        std::vector<double> brk;
        double big_jump_mean = 0.0;
        Window hull = c.pieces.front().first;
        for (const auto& [w, v] : c.pieces) {
            support.push_back(w);
            brk.push_back(w.lo);
            brk.push_back(w.hi);
            hull = Window::hull(hull, w);
            if (std::abs(v) > 1.0) big_jump_mean += v * m.mass(w);
        }
        const StochasticIntegralSampler integral(fn, support, brk, m);
        ConfigSampler sampler(m, hull);
        RunningMoments stat;
        for (std::uint64_t t = 0; t < trials; ++t) {
            Stream rng(rs.seed + 9000 + case_idx, t);
            stat.add(integral.eval(sampler.sample(rng)));
        }
        rep.records.push_back(CheckRecord::stochastic(
            "E[I(f)] = int_{|f|>1} f dmu [" + c.name + "]", stat.mean(), big_jump_mean,
            stat.se_mean()));
        ++case_idx;
    }
}

// --- modules nsmap / coherent: Weyl and chi -------------------------------

inline void weyl_identity(const json& params, const RunSettings& rs, Report& rep) {
    cfg::require_keys(params, {"check", "paths"}, "weyl_identity");
    const std::uint64_t paths = rs.trials(params.contains("paths")
                                              ? json{{"trials", params["paths"]}}
                                              : json::object(),
                                          1000);
    struct Case {
        std::string name;
        BaseMeasure m;
        NsMap t;
        TestFunction f;
        Window sample_window{0.0, 1.0};
    };
    std::vector<Case> cases;
    {
        BaseMeasure leb = lebesgue();
        const NsMap swap_unequal = make_swap(Window(0.0, 1.0), Window(1.0, 5.0), leb);
        cases.push_back({"swap masses (1,4)", leb, swap_unequal,
                         indicator_fn(0.3, Window(0.0, 1.0), leb), Window(-0.5, 5.5)});
        const NsMap swap_equal = make_swap(Window(0.0, 1.0), Window(1.0, 2.0), leb);
        cases.push_back({"measure-preserving swap", leb, swap_equal,
                         hat_fn(0.4, Window(0.0, 2.0), leb), Window(-0.5, 2.5)});
        BaseMeasure wl = weighted_line();
        cases.push_back({"translation on weighted line", wl, make_translation(1.0, wl),
                         indicator_fn(0.25, Window(-1.0, 1.0), wl), Window(-2.5, 2.5)});
    }
    for (auto& c : cases) {
        const WeylChecker checker(c.t, c.f, c.m);
        ConfigSampler sampler(c.m, c.sample_window);
        double worst = 0.0;
        for (std::uint64_t t = 0; t < paths; ++t) {
            Stream rng(rs.seed + 10000, t);
            worst = std::max(worst, checker.check(sampler.sample(rng)).residual);
        }
        rep.records.push_back(CheckRecord::deterministic(
            "Weyl identity, worst path residual [" + c.name + "]", worst, 0.0, 1e-9));
    }
}

inline void chi_checks(const json& params, const RunSettings& rs, Report& rep) {
    (void)rs;
    cfg::require_keys(params, {"check", "ts"}, "chi_checks");
    std::vector<double> ts{0.5, 1.0, 2.0};
    if (params.contains("ts")) ts = params["ts"].get<std::vector<double>>();
    const BaseMeasure wl = weighted_line();
    for (double t : ts) {
        const NsMap back = make_translation(-t, wl);
        rep.records.push_back(CheckRecord::deterministic(
            "chi(T_{-t}) = t [t=" + std::to_string(t) + "]", chi(back, wl), t, 1e-8));
    }
    const BaseMeasure leb = lebesgue();
    const NsMap sw = make_swap(Window(0.0, 1.0), Window(1.0, 5.0), leb);
    rep.records.push_back(
        CheckRecord::deterministic("chi(swap) = 0 (conservative map)", chi(sw, leb), 0.0, 1e-8));

    const NsMap a = make_translation(-0.5, wl);
    const NsMap b = make_translation(-1.0, wl);
    const NsMap ab = compose(a, b);
    rep.records.push_back(CheckRecord::deterministic("chi additive under composition",
                                                     chi(ab, wl), chi(a, wl) + chi(b, wl), 1e-8));
    const NsMap sw2 = make_swap(Window(2.0, 3.0), Window(4.0, 5.0), wl);
    const NsMap mixed = compose(make_translation(-1.0, wl), sw2);
    rep.records.push_back(CheckRecord::deterministic(
        "chi additive (translation then swap)", chi(mixed, wl),
        chi(make_translation(-1.0, wl), wl) + chi(sw2, wl), 1e-8));
}

// --- module dynamics ------------------------------------------------------

inline ActionZ translation_action(double t, const BaseMeasure& m) {
    return ActionZ(make_translation(t, m), 64,
                   [t, m](long g) { return make_translation(t * static_cast<double>(g), m); });
}

inline void entropy_checks(const json& params, const RunSettings& rs, Report& rep) {
    (void)rs;
    cfg::require_keys(params, {"check", "scales"}, "entropy_checks");
    std::vector<double> scales{0.5, 2.0, 5.0};
    if (params.contains("scales")) scales = params["scales"].get<std::vector<double>>();

    const BaseMeasure leb = lebesgue();
    // measure preserving: equal-mass swap
    {
        ActionZ mp(make_swap(Window(0.0, 1.0), Window(1.0, 2.0), leb));
        const auto h = entropy(mp, KappaMeasure::symmetric_pair(), leb);
        rep.records.push_back(CheckRecord::deterministic(
            "entropy = 0 for a measure-preserving action", h.value, 0.0, 1e-10));
    }
    // step generator, kappa = delta_1
    {
        ActionZ step(make_density_map({{Window(0.0, 1.0), 2.0}}, leb));
        const KappaMeasure d1 = KappaMeasure::dirac(1);
        const auto h = entropy(step, d1, leb);
        rep.records.push_back(CheckRecord::deterministic("entropy of the phi=2 step generator",
                                                         h.value, 1.0 - std::log(2.0), 1e-8));
        rep.records.push_back(CheckRecord::gate("entropy nonnegative", h.value >= 0.0, h.value));
        const double h1 = entropy_aut1_form(step, d1, leb);
        rep.records.push_back(
            CheckRecord::deterministic("L1-form agreement (step generator)", h1, h.value, 1e-8));
        for (double c : scales) {
            const auto hc = entropy(step, d1, leb.scaled(c));
            rep.records.push_back(CheckRecord::deterministic(
                "entropy scaling h(c mu) = c h(mu) [c=" + std::to_string(c) + "]", hc.value,
                c * h.value, 1e-8));
        }
    }
    // symmetric kappa on the translation action: chi terms cancel
    {
        const BaseMeasure wl = weighted_line();
        ActionZ tr = translation_action(-1.0, wl);
        const KappaMeasure sym = KappaMeasure::symmetric_pair();
        const auto h = entropy(tr, sym, wl);
        const double h1 = entropy_aut1_form(tr, sym, wl);
        rep.records.push_back(CheckRecord::deterministic(
            "L1-form agreement (symmetric kappa, translation)", h1, h.value, 1e-8));
        rep.records.push_back(CheckRecord::gate("translation entropy positive", h.value > 0.0,
                                                h.value));
    }
}

inline void stationarity(const json& params, const RunSettings& rs, Report& rep) {
    cfg::require_keys(params, {"check", "trials"}, "stationarity");
    const std::uint64_t trials = rs.trials(params, 20000);
    const BaseMeasure leb = lebesgue();
    const std::vector<Window> windows{Window(-0.5, 0.5), Window(0.0, 1.0), Window(1.0, 2.5)};
    {
        ActionZ mp(make_swap(Window(0.0, 1.0), Window(1.0, 2.0), leb));
        const auto st = stationarity_defect(mp, KappaMeasure::symmetric_pair(), leb,
                                            {Window(0.0, 1.0), Window(0.5, 1.5)}, 0, rs.seed);
        rep.records.push_back(CheckRecord::deterministic(
            "stationarity defect = 0 (measure preserving)", st.defect, 0.0, 1e-9));
    }
    {
        const BaseMeasure wl = weighted_line();
        ActionZ tr = translation_action(1.0, wl);
        const auto delta1 = stationarity_defect(tr, KappaMeasure::dirac(1), wl, windows, 0,
                                                rs.seed + 11000);
        rep.records.push_back(CheckRecord::gate("translation defect strictly positive",
                                                delta1.defect > 0.1, delta1.defect));
        const auto sym = stationarity_defect(tr, KappaMeasure::symmetric_pair(), wl,
                                             {Window(0.0, 1.0), Window(1.0, 2.5)}, trials,
                                             rs.seed + 11000);
        rep.records.push_back(CheckRecord::gate("Jensen void-probability gap positive",
                                                sym.jensen_gap > 1e-4, sym.jensen_gap));
        rep.records.push_back(CheckRecord::stochastic("empirical mixture void probability",
                                                      sym.empirical_gap_z, 0.0, 1.0));
    }
}

inline void zero_type(const json& params, const RunSettings& rs, Report& rep) {
    cfg::require_keys(params, {"check", "g_max", "mc_trials"}, "zero_type");
    const long g_max = static_cast<long>(cfg::number_or(params, "g_max", 16));
    const std::uint64_t mc_trials =
        static_cast<std::uint64_t>(cfg::number_or(params, "mc_trials", 20000) * rs.trials_scale);

    const BaseMeasure wl = weighted_line();
    ActionZ tr = translation_action(-1.0, wl);
    const auto profile = zero_type_profile(tr, g_max, wl, 0);
    CsvTable table;
    table.name = "zero_type_profile";
    table.columns = {"g", "norm", "term"};
    double worst = 0.0;
    const double rate = std::sqrt(2.0) - 1.0;
    for (const auto& row : profile) {
        table.rows.push_back({static_cast<double>(row.g), row.norm,
                              std::exp(-0.5 * row.norm * row.norm)});
        const double target = rate * std::sqrt(static_cast<double>(std::labs(row.g)));
        worst = std::max(worst, std::abs(row.norm - target));
    }
    rep.tables.push_back(std::move(table));
    rep.records.push_back(CheckRecord::deterministic(
        "translation cocycle profile ||c(g)|| = (sqrt2 - 1) sqrt|g|", worst, 0.0, 1e-8));
    rep.records.push_back(CheckRecord::gate(
        "profile unbounded over the range",
        profile.back().norm > profile[profile.size() / 2 + 1].norm, profile.back().norm));

    // Koopman cross-check for small |g|
    const auto small = zero_type_profile(tr, 3, wl, mc_trials, rs.seed + 12000);
    for (const auto& row : small) {
        if (row.g == 0) continue;
        rep.records.push_back(CheckRecord::stochastic(
            "<U 1,1> = e^{-||c(g)||^2/2} [g=" + std::to_string(row.g) + "]", row.koopman_mc,
            row.koopman_target, row.koopman_se));
    }

    // measure-preserving generator: identically zero profile
    const BaseMeasure leb = lebesgue();
    ActionZ mp(make_swap(Window(0.0, 1.0), Window(1.0, 2.0), leb));
    const auto flat = zero_type_profile(mp, 8, leb, 0);
    double flat_max = 0.0;
    for (const auto& row : flat) flat_max = std::max(flat_max, row.norm);
    rep.records.push_back(CheckRecord::deterministic(
        "measure-preserving profile identically zero", flat_max, 0.0, 1e-10));
}

inline void dissipativity_translation(const json& params, const RunSettings& rs, Report& rep) {
    (void)rs;
    cfg::require_keys(params, {"check", "g_max", "tail_g"}, "dissipativity_translation");
    const long g_max = static_cast<long>(cfg::number_or(params, "g_max", 64));
    const long tail_g = static_cast<long>(cfg::number_or(params, "tail_g", 400));

    const BaseMeasure wl = weighted_line();
    ActionZ tr = translation_action(-1.0, wl);
    const double rate_sq = (std::sqrt(2.0) - 1.0) * (std::sqrt(2.0) - 1.0);

    const auto rep_sums = dissipativity_score(tr, g_max, wl);
    double worst = 0.0;
    CsvTable table;
    table.name = "dissipativity_translation";
    table.columns = {"g", "norm_sq", "term", "partial_sum"};
    for (std::size_t i = 0; i < rep_sums.g.size(); ++i) {
        const double target = std::exp(-0.5 * rate_sq * std::labs(rep_sums.g[i]));
        worst = std::max(worst, std::abs(rep_sums.term[i] - target));
        table.rows.push_back({static_cast<double>(rep_sums.g[i]), rep_sums.norm_sq[i],
                              rep_sums.term[i], rep_sums.partial[i]});
    }
    rep.tables.push_back(std::move(table));
    rep.records.push_back(CheckRecord::deterministic(
        "translation terms match e^{-(sqrt2-1)^2 |g|/2}", worst, 0.0, 1e-8));

    // closed geometric form of the full series
    const double r = std::exp(-0.5 * rate_sq);
    const double closed = 1.0 + 2.0 * r * (1.0 - std::pow(r, g_max)) / (1.0 - r);
    rep.records.push_back(CheckRecord::deterministic("partial sum matches geometric closed form",
                                                     rep_sums.partial.back(), closed, 1e-8));

    const auto long_run = dissipativity_score(tr, tail_g, wl);
    rep.records.push_back(CheckRecord::gate("summable verdict on the long range",
                                            long_run.summable_verdict, long_run.last_increment,
                                            "last increment"));
}

// --- module constructions -------------------------------------------------

inline void bernoulli_norms(const json& params, const RunSettings& rs, Report& rep) {
    cfg::require_keys(params, {"check", "trials", "levels", "k_max", "shifts"}, "bernoulli_norms");
    const int levels = static_cast<int>(cfg::number_or(params, "levels", 8));
    const int k_max = static_cast<int>(cfg::number_or(params, "k_max", 6));
    std::vector<long> shifts{1, 2, 4, 8, 16, 32};
    if (params.contains("shifts")) shifts = params["shifts"].get<std::vector<long>>();
    const std::uint64_t trials = rs.trials(params, 100000);

    BernoulliConstruction c(levels, 64);
    const auto rows = c.norm_check(k_max, shifts, trials, rs.seed + 13000);
    CsvTable table;
    table.name = "bernoulli_norms";
    table.columns = {"k", "n", "empirical", "target", "se", "z"};
    int failures = 0;
    double worst_z = 0.0;
    for (const auto& row : rows) {
        table.rows.push_back({static_cast<double>(row.k), static_cast<double>(row.n),
                              row.empirical, row.target, row.se, row.z});
        if (!row.pass) ++failures;
        worst_z = std::max(worst_z, std::abs(row.z));
    }
    rep.tables.push_back(std::move(table));
    rep.records.push_back(CheckRecord::gate(
        "block-difference variances match closed forms (" + std::to_string(rows.size()) +
            " cells)",
        failures == 0, worst_z, "worst |z|"));
    rep.records.push_back(CheckRecord::deterministic(
        "k=1, n=2 closed form", BernoulliConstruction::norm2_yk(1, 2), 3.0, 1e-12));
}

inline void bernoulli_dissipativity(const json& params, const RunSettings& rs, Report& rep) {
    (void)rs;
    cfg::require_keys(params, {"check", "n_max"}, "bernoulli_dissipativity");
    const long n_max = static_cast<long>(cfg::number_or(params, "n_max", 64));
    BernoulliConstruction c(8, n_max);
    const auto sums = c.dissipativity(n_max);

    bool monotone = true;
    for (std::size_t i = 1; i < sums.partial.size(); ++i) {
        if (sums.partial[i] < sums.partial[i - 1]) monotone = false;
    }
    // per-|n| increments must shrink
    bool decreasing = true;
    double prev_inc = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < sums.g.size(); ++i) {
        if (sums.g[i] <= 1) continue;  // positive side carries the |n| sweep
        if (sums.term[i] > prev_inc + 1e-15) decreasing = false;
        prev_inc = sums.term[i];
    }
    CsvTable table;
    table.name = "bernoulli_dissipativity";
    table.columns = {"n", "norm_sq", "term", "partial_sum"};
    for (std::size_t i = 0; i < sums.g.size(); ++i) {
        table.rows.push_back({static_cast<double>(sums.g[i]), sums.norm_sq[i], sums.term[i],
                              sums.partial[i]});
    }
    rep.tables.push_back(std::move(table));
    rep.records.push_back(CheckRecord::gate("partial sums monotone nondecreasing", monotone,
                                            sums.partial.back()));
    rep.records.push_back(CheckRecord::gate("increments nonincreasing in |n|", decreasing,
                                            sums.last_increment));
    rep.records.push_back(CheckRecord::deterministic("final increment small",
                                                     sums.last_increment, 0.0, 1e-6));
    rep.records.push_back(CheckRecord::gate(
        "lower bound constant C > 0 in C|n|/log2(|n|)^2",
        BernoulliConstruction::lower_bound_constant(n_max) > 0.0,
        BernoulliConstruction::lower_bound_constant(n_max)));
    rep.records.push_back(CheckRecord::gate("truncation tail budget",
                                            c.truncation_tail() < 0.15, c.truncation_tail()));
}

inline void prop_t_construction(const json& params, const RunSettings& rs, Report& rep) {
    cfg::require_keys(params, {"check", "trials", "levels", "g_max", "kappa_n_max"},
                      "prop_t_construction");
    const int levels = static_cast<int>(cfg::number_or(params, "levels", 12));
    const long g_max = static_cast<long>(cfg::number_or(params, "g_max", 4));
    const int kappa_n_max = static_cast<int>(cfg::number_or(params, "kappa_n_max", 6));
    const std::uint64_t trials = rs.trials(params, 100000);

    PropTConstruction c(levels);

    const auto inv_rows = c.almost_invariance_report(trials, rs.seed + 14000);
    int inv_failures = 0;
    for (const auto& row : inv_rows) {
        if (!row.pass) ++inv_failures;
    }
    rep.records.push_back(CheckRecord::gate(
        "almost-invariance bounds hold over the K_n windows (" +
            std::to_string(inv_rows.size()) + " cells)",
        inv_failures == 0, static_cast<double>(inv_failures)));

    const auto block_rows = c.block_prob_report(trials, rs.seed + 15000);
    CsvTable table;
    table.name = "prop_t_block_probs";
    table.columns = {"n", "empirical", "target", "z"};
    int block_failures = 0;
    double worst_z = 0.0;
    for (const auto& row : block_rows) {
        table.rows.push_back({static_cast<double>(row.n), row.empirical, row.target, row.z});
        if (!row.pass) ++block_failures;
        worst_z = std::max(worst_z, std::abs(row.z));
    }
    rep.tables.push_back(std::move(table));
    rep.records.push_back(CheckRecord::gate(
        "P(B_n) = 2^{-n} for n <= " + std::to_string(levels), block_failures == 0, worst_z,
        "worst |z|"));

    const auto integ = c.integrability_report(g_max, trials, rs.seed + 16000);
    for (const auto& row : integ) {
        rep.records.push_back(CheckRecord::gate(
            "||F^2 - F^2 o T_g||_1 <= majorant [g=" + std::to_string(row.g) + "]",
            row.f2_defect <= row.f2_majorant + 4.0 * row.se_f2, row.f2_defect,
            "majorant " + std::to_string(row.f2_majorant)));
        rep.records.push_back(CheckRecord::gate(
            "log-derivative L1 norm <= C_N [g=" + std::to_string(row.g) + "]",
            row.log_defect <= row.log_majorant + 4.0 * row.se_log, row.log_defect,
            "C_N " + std::to_string(row.log_majorant)));
    }

    const KappaMeasure kappa = PropTConstruction::paired_kappa(kappa_n_max);
    // the pairing condition kappa(K_{n-1}) > 1 - 1/(2^n C_n), K_0 = {0}
    bool pairing_ok = true;
    for (int n = 1; n <= kappa_n_max; ++n) {
        double inside = 0.0;
        for (const auto& [g, w] : kappa.atoms) {
            if (std::labs(g) <= n - 1) inside += w;
        }
        if (!(inside > 1.0 - 1.0 / (std::pow(2.0, n) * PropTConstruction::cn_majorant(n)))) {
            pairing_ok = false;
        }
    }
    rep.records.push_back(CheckRecord::gate("kappa/K_n pairing satisfied", pairing_ok));

    const auto h = c.entropy_estimate(kappa, trials, rs.seed + 17000);
    rep.records.push_back(CheckRecord::gate("entropy estimate <= 1 + 4 SE", h.below_one, h.value,
                                            "se " + std::to_string(h.se)));
    rep.records.push_back(CheckRecord::gate("entropy estimate nonnegative",
                                            h.value >= -4.0 * h.se, h.value));
}

}  // namespace checks

using CheckFn = std::function<void(const json&, const RunSettings&, Report&)>;

inline const std::map<std::string, CheckFn>& check_registry() {
    static const std::map<std::string, CheckFn> registry{
        {"poisson_sampling", checks::poisson_sampling},
        {"renyi_void", checks::renyi_void},
        {"exponential_relation", checks::exponential_relation},
        {"coherent_normalization", checks::coherent_normalization},
        {"abs_value_identity", checks::abs_value_identity},
        {"cone_preservation", checks::cone_preservation},
        {"rn_identification", checks::rn_identification},
        {"rn_cross_formula", checks::rn_cross_formula},
        {"expected_log_rn", checks::expected_log_rn_check},
        {"infdiv_char", checks::infdiv_char},
        {"stochastic_integral_mean", checks::stochastic_integral_mean},
        {"weyl_identity", checks::weyl_identity},
        {"chi_checks", checks::chi_checks},
        {"entropy_checks", checks::entropy_checks},
        {"stationarity", checks::stationarity},
        {"zero_type", checks::zero_type},
        {"dissipativity_translation", checks::dissipativity_translation},
        {"bernoulli_norms", checks::bernoulli_norms},
        {"bernoulli_dissipativity", checks::bernoulli_dissipativity},
        {"prop_t_construction", checks::prop_t_construction},
    };
    return registry;
}

// Execute a parsed scenario config. Unknown keys or checks raise ConfigError.
inline Report run_scenario(const json& config, double trials_scale = 1.0,
                           std::optional<std::uint64_t> seed_override = std::nullopt,
                           bool dump_configs = false) {
    cfg::require_keys(config, {"schema_version", "name", "seed", "checks"}, "scenario");
    if (!config.contains("schema_version") || config["schema_version"] != 1) {
        throw ConfigError("scenario: schema_version must be 1");
    }
    if (!config.contains("name") || !config["name"].is_string()) {
        throw ConfigError("scenario: missing name");
    }
    if (!config.contains("seed") || !config["seed"].is_number_integer() ||
        config["seed"].get<long long>() < 0) {
        throw ConfigError("scenario: seed is required (no nondeterministic default)");
    }
    if (!config.contains("checks") || !config["checks"].is_array() || config["checks"].empty()) {
        throw ConfigError("scenario: needs a nonempty checks array");
    }

    RunSettings rs;
    rs.seed = seed_override ? *seed_override : config["seed"].get<std::uint64_t>();
    rs.trials_scale = trials_scale;
    rs.dump_configs = dump_configs;

    Report rep;
    rep.scenario = config["name"].get<std::string>();
    rep.seed = rs.seed;

    for (const auto& item : config["checks"]) {
        if (!item.is_object() || !item.contains("check") || !item["check"].is_string()) {
            throw ConfigError("scenario: each check needs a 'check' name");
        }
        const std::string name = item["check"].get<std::string>();
        const auto& registry = check_registry();
        auto it = registry.find(name);
        if (it == registry.end()) throw ConfigError("unknown check name: " + name);
        it->second(item, rs, rep);
    }
    return rep;
}

}  // namespace poissonlab
