// Experiment runner: loads a scenario config, executes its checks and emits
// structured reports (JSON and/or CSV). Exit codes: 0 all checks pass,
// 1 at least one check failed, 2 config or I/O error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "poissonlab/report.hpp"
#include "poissonlab/scenario.hpp"

namespace {

int run_command(const std::string& config_path, std::optional<std::uint64_t> seed,
                double trials_scale, const std::string& out_dir, const std::string& format,
                bool dump_configs) {
    namespace fs = std::filesystem;
    std::ifstream in(config_path);
    if (!in) {
        std::cerr << "error: cannot open config " << config_path << "\n";
        return 2;
    }
    poissonlab::json config;
    try {
        in >> config;
    } catch (const std::exception& e) {
        std::cerr << "error: config does not parse: " << e.what() << "\n";
        return 2;
    }

    poissonlab::Report report;
    try {
        report = poissonlab::run_scenario(config, trials_scale, seed, dump_configs);
    } catch (const poissonlab::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error while running checks: " << e.what() << "\n";
        return 2;
    }

    const bool want_json = format == "json" || format == "both";
    const bool want_csv = format == "csv" || format == "both";

    if (!out_dir.empty()) {
        std::error_code ec;
        fs::create_directories(out_dir, ec);
        if (ec) {
            std::cerr << "error: cannot create out dir " << out_dir << "\n";
            return 2;
        }
        if (want_json) {
            const fs::path p = fs::path(out_dir) / (report.scenario + "_report.json");
            std::ofstream out(p, std::ios::binary);
            if (!out) {
                std::cerr << "error: cannot write " << p.string() << "\n";
                return 2;
            }
            out << report.to_text();
        }
        if (want_csv) {
            for (const auto& table : report.tables) {
                const fs::path p = fs::path(out_dir) / (report.scenario + "_" + table.name + ".csv");
                std::ofstream out(p, std::ios::binary);
                if (!out) {
                    std::cerr << "error: cannot write " << p.string() << "\n";
                    return 2;
                }
                out << table.to_string();
            }
            // flat CSV view of the check records
            poissonlab::CsvTable recs;
            recs.name = "checks";
            recs.columns = {"estimate", "target", "se_or_tol", "z_or_residual", "pass"};
            for (const auto& r : report.records) {
                recs.rows.push_back({r.estimate, r.target, r.se_or_tol, r.z_or_residual,
                                     r.pass ? 1.0 : 0.0});
            }
            const fs::path p = fs::path(out_dir) / (report.scenario + "_checks.csv");
            std::ofstream out(p, std::ios::binary);
            out << recs.to_string();
        }
    }

    std::cout << report.to_text();
    int failed = 0;
    for (const auto& r : report.records) {
        if (!r.pass) {
            ++failed;
            std::cerr << "FAIL: " << r.name << "\n";
        }
    }
    std::cerr << report.scenario << ": " << (report.records.size() - failed) << "/"
              << report.records.size() << " checks passed\n";
    return failed == 0 ? 0 : 1;
}

int validate_command(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        std::cerr << "error: cannot open " << path << "\n";
        return 2;
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        std::cerr << "error: not valid JSON: " << e.what() << "\n";
        return 2;
    }
    std::string err;
    if (!poissonlab::validate_report_json(j, &err)) {
        std::cerr << "invalid report: " << err << "\n";
        return 1;
    }
    std::cout << "report schema ok\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "poissonlab: scenario-driven verification runner.\n"
        "Emitted CSV schemas:\n"
        "  <scenario>_checks.csv                estimate,target,se_or_tol,z_or_residual,pass\n"
        "  <scenario>_configs_mass<i>.csv       trial_id,point          (--dump-configs)\n"
        "  <scenario>_zero_type_profile.csv     g,norm,term\n"
        "  <scenario>_dissipativity_*.csv       g,norm_sq,term,partial_sum\n"
        "  <scenario>_char_fn_<i>.csv           a,re_analytic,im_analytic,re_empirical,"
        "im_empirical,se_re,se_im\n"
        "  <scenario>_bernoulli_norms.csv       k,n,empirical,target,se,z\n"
        "  <scenario>_prop_t_block_probs.csv    n,empirical,target,z"};
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed_value = 0;
    bool seed_set = false;
    double trials_scale = 1.0;
    std::string out_dir;
    std::string format = "json";
    bool dump_configs = false;

    auto* run = app.add_subcommand("run", "run a scenario config");
    run->add_option("--config", config_path, "scenario config file (JSON)")->required();
    auto* seed_opt = run->add_option("--seed", seed_value, "override the config seed");
    run->add_option("--trials-scale", trials_scale, "multiply all trial counts");
    run->add_option("--out-dir", out_dir, "directory for report and CSV files");
    run->add_option("--format", format, "json | csv | both")
        ->check(CLI::IsMember({"json", "csv", "both"}));
    run->add_flag("--dump-configs", dump_configs,
                  "emit sampled configurations as CSV (trial_id, point)");

    std::string report_path;
    auto* validate = app.add_subcommand("validate-report", "check a report file against the schema");
    validate->add_option("report", report_path, "report JSON file")->required();

    auto* list = app.add_subcommand("list-checks", "list available check names");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    seed_set = seed_opt->count() > 0;

    if (run->parsed()) {
        return run_command(config_path,
                           seed_set ? std::optional<std::uint64_t>(seed_value) : std::nullopt,
                           trials_scale, out_dir, format, dump_configs);
    }
    if (validate->parsed()) {
        return validate_command(report_path);
    }
    if (list->parsed()) {
        for (const auto& [name, fn] : poissonlab::check_registry()) {
            (void)fn;
            std::cout << name << "\n";
        }
        return 0;
    }
    return 2;
}
