// Acceptance suite: runs every bundled scenario through the library and
// prints one PASS/FAIL line per criterion, with runtime gates where stated.
// Exit code 0 only if every criterion (and every bundled check) passes.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "poissonlab/scenario.hpp"

namespace {

using poissonlab::json;
using poissonlab::Report;

struct CheckRun {
    std::string scenario;
    std::string check;
    Report report;
    double seconds = 0.0;
};

json load_json(const std::filesystem::path& p) {
    std::ifstream in(p);
    if (!in) throw std::runtime_error("cannot open " + p.string());
    json j;
    in >> j;
    return j;
}

double now_seconds() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

struct Criterion {
    int id = 0;
    std::string title;
    bool pass = true;
    double seconds = 0.0;
    double time_limit = 0.0;  // 0 = no gate
    int records = 0;
    std::string detail;
};

class Harness {
public:
    explicit Harness(std::filesystem::path dir) : dir_(std::move(dir)) {}

    void run_scenario_file(const std::string& file) {
        const json config = load_json(dir_ / file);
        for (const auto& item : config["checks"]) {
            json single = config;
            single["checks"] = json::array({item});
            const double t0 = now_seconds();
            Report rep = poissonlab::run_scenario(single);
            const double t1 = now_seconds();
            CheckRun run;
            run.scenario = config["name"].get<std::string>();
            run.check = item["check"].get<std::string>();
            run.report = std::move(rep);
            run.seconds = t1 - t0;
            runs_.push_back(std::move(run));
        }
    }

    Criterion criterion(int id, const std::string& title, const std::string& scenario,
                        const std::vector<std::string>& checks, double time_limit = 0.0) {
        Criterion c;
        c.id = id;
        c.title = title;
        c.time_limit = time_limit;
        for (const auto& run : runs_) {
            if (run.scenario != scenario) continue;
            bool wanted = false;
            for (const auto& name : checks) {
                if (run.check == name) wanted = true;
            }
            if (!wanted) continue;
            c.seconds += run.seconds;
            for (const auto& r : run.report.records) {
                ++c.records;
                if (!r.pass) {
                    c.pass = false;
                    if (!c.detail.empty()) c.detail += "; ";
                    c.detail += r.name;
                }
            }
        }
        if (c.records == 0) {
            c.pass = false;
            c.detail = "no records found";
        }
        if (time_limit > 0.0 && c.seconds > time_limit) {
            c.pass = false;
            c.detail += (c.detail.empty() ? "" : "; ") + std::string("over time budget");
        }
        return c;
    }

    bool all_runs_pass(std::string* failing) const {
        bool ok = true;
        for (const auto& run : runs_) {
            for (const auto& r : run.report.records) {
                if (!r.pass) {
                    ok = false;
                    if (failing) *failing += run.scenario + "/" + r.name + "; ";
                }
            }
        }
        return ok;
    }

    double total_seconds() const {
        double s = 0.0;
        for (const auto& run : runs_) s += run.seconds;
        return s;
    }

    const std::filesystem::path& dir() const { return dir_; }

private:
    std::filesystem::path dir_;
    std::vector<CheckRun> runs_;
};

void print(const Criterion& c) {
    std::string limit;
    if (c.time_limit > 0.0) {
        limit = " < " + std::to_string(static_cast<int>(c.time_limit)) + " s limit";
    }
    std::printf("%s criterion %2d: %s (%d records, %.1f s%s)%s%s\n", c.pass ? "PASS" : "FAIL",
                c.id, c.title.c_str(), c.records, c.seconds, limit.c_str(),
                c.detail.empty() ? "" : " -- ", c.detail.c_str());
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: acceptance <scenarios-dir>\n";
        return 2;
    }
    Harness h{std::filesystem::path(argv[1])};
    const double suite_t0 = now_seconds();

    try {
        h.run_scenario_file("poisson_sampling.json");
        h.run_scenario_file("coherent_battery.json");
        h.run_scenario_file("rn_suspension.json");
        h.run_scenario_file("infdiv.json");
        h.run_scenario_file("weyl_chi.json");
        h.run_scenario_file("chi_translation.json");
        h.run_scenario_file("dynamics.json");
        h.run_scenario_file("bernoulli.json");
        h.run_scenario_file("prop_t.json");
    } catch (const std::exception& e) {
        std::cerr << "acceptance aborted: " << e.what() << "\n";
        return 2;
    }

    std::vector<Criterion> criteria;
    criteria.push_back(h.criterion(1, "Poisson count mean/variance/void for 4 masses",
                                   "poisson_sampling", {"poisson_sampling"}, 5.0));
    criteria.push_back(h.criterion(2, "exponential relation over the 6-pair battery",
                                   "coherent_battery", {"exponential_relation"}, 10.0));
    criteria.push_back(h.criterion(3, "E[Exp(phi-1)] = 1 for three density ratios",
                                   "coherent_battery", {"coherent_normalization"}));
    criteria.push_back(h.criterion(4, "absolute-value identity, pathwise 1e-9",
                                   "coherent_battery", {"abs_value_identity"}));
    criteria.push_back(h.criterion(5, "RN identification against nu* (voids, intensities)",
                                   "rn_suspension", {"rn_identification"}, 20.0));
    criteria.push_back(h.criterion(6, "cross-formula RN agreement, pathwise 1e-8",
                                   "rn_suspension", {"rn_cross_formula"}));
    criteria.push_back(h.criterion(7, "infinitely divisible law of log RN (char fn + mean)",
                                   "infdiv", {"infdiv_char"}));
    criteria.push_back(h.criterion(8, "stochastic-integral mean identity on 3 profiles",
                                   "infdiv", {"stochastic_integral_mean"}));
    criteria.push_back(h.criterion(9, "Weyl identity, pathwise 1e-9 (swap + translation)",
                                   "weyl_chi", {"weyl_identity"}));
    criteria.push_back(h.criterion(10, "chi values and additivity at 1e-8", "weyl_chi",
                                   {"chi_checks"}));
    criteria.push_back(h.criterion(11, "entropy: sign, zero, scaling, L1-form agreement",
                                   "dynamics", {"entropy_checks"}));
    {
        Criterion a = h.criterion(12, "dissipativity: translation terms + block-example sums",
                                  "dynamics", {"dissipativity_translation"});
        Criterion b = h.criterion(12, "", "bernoulli", {"bernoulli_dissipativity"});
        a.pass = a.pass && b.pass;
        a.records += b.records;
        a.seconds += b.seconds;
        if (!b.detail.empty()) a.detail += (a.detail.empty() ? "" : "; ") + b.detail;
        criteria.push_back(a);
    }
    criteria.push_back(h.criterion(13, "block-difference variances vs closed forms", "bernoulli",
                                   {"bernoulli_norms"}, 60.0));
    criteria.push_back(h.criterion(14, "product-odometer construction gates", "prop_t",
                                   {"prop_t_construction"}));

    // criterion 15: byte-identical reports under a fixed seed, suite runtime
    Criterion det;
    det.id = 15;
    det.title = "determinism and full-suite runtime";
    try {
        for (const char* file : {"poisson_sampling.json", "rn_suspension.json"}) {
            const json config = load_json(h.dir() / file);
            const std::string a = poissonlab::run_scenario(config).to_text();
            const std::string b = poissonlab::run_scenario(config).to_text();
            ++det.records;
            if (a != b) {
                det.pass = false;
                det.detail += std::string(file) + " not byte-identical; ";
            }
        }
    } catch (const std::exception& e) {
        det.pass = false;
        det.detail += e.what();
    }
    const double suite_seconds = now_seconds() - suite_t0;
    det.seconds = suite_seconds;
    det.time_limit = 300.0;
    if (suite_seconds > 300.0) {
        det.pass = false;
        det.detail += "suite over 5 minutes";
    }
    criteria.push_back(det);

    bool all = true;
    for (const auto& c : criteria) {
        print(c);
        all = all && c.pass;
    }
    std::string extras_detail;
    const bool extras = h.all_runs_pass(&extras_detail);
    std::printf("%s module extras: every bundled check passes%s%s\n", extras ? "PASS" : "FAIL",
                extras_detail.empty() ? "" : " -- ", extras_detail.c_str());
    std::printf("total measured runtime: %.1f s\n", suite_seconds);
    return (all && extras) ? 0 : 1;
}
