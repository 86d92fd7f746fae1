#include <catch2/catch_amalgamated.hpp>

#include "poissonlab/report.hpp"
#include "poissonlab/scenario.hpp"

using namespace poissonlab;

namespace {

json minimal_scenario() {
    return json{{"schema_version", 1},
                {"name", "mini"},
                {"seed", 99},
                {"checks", json::array({json{{"check", "chi_checks"}, {"ts", json::array({1.0})}}})}};
}

}  // namespace

TEST_CASE("scenario schema is strict") {
    REQUIRE_THROWS_AS(run_scenario(json{{"name", "x"}}), ConfigError);

    json no_seed = minimal_scenario();
    no_seed.erase("seed");
    REQUIRE_THROWS_AS(run_scenario(no_seed), ConfigError);

    json unknown_key = minimal_scenario();
    unknown_key["extra"] = 1;
    REQUIRE_THROWS_AS(run_scenario(unknown_key), ConfigError);

    json unknown_check = minimal_scenario();
    unknown_check["checks"][0]["check"] = "no_such_check";
    REQUIRE_THROWS_AS(run_scenario(unknown_check), ConfigError);

    json bad_param = minimal_scenario();
    bad_param["checks"][0]["bogus"] = true;
    REQUIRE_THROWS_AS(run_scenario(bad_param), ConfigError);

    json wrong_version = minimal_scenario();
    wrong_version["schema_version"] = 2;
    REQUIRE_THROWS_AS(run_scenario(wrong_version), ConfigError);
}

TEST_CASE("builders reachable from config") {
    REQUIRE(cfg::measure(json{{"builder", "weighted_line"}}).mass(Window(-1.0, 1.0)) ==
            Catch::Approx(3.0));
    const json pw{{"builder", "piecewise"},
                  {"breaks", json::array({0.0, 1.0, 2.0})},
                  {"values", json::array({2.0, 3.0})}};
    REQUIRE(cfg::measure(pw).mass(Window(0.0, 2.0)) == Catch::Approx(5.0));
    REQUIRE_THROWS_AS(cfg::measure(json{{"builder", "nope"}}), ConfigError);

    const BaseMeasure m = lebesgue();
    const json swap_spec{{"kind", "swap"}, {"a", json::array({0.0, 1.0})},
                         {"b", json::array({1.0, 2.0})}};
    REQUIRE(cfg::map(swap_spec, m).rn_derivative(0.5) == Catch::Approx(1.0));
    REQUIRE_THROWS_AS(cfg::map(json{{"kind", "wat"}}, m), ConfigError);

    const json fn_spec{{"kind", "indicator"}, {"height", 0.5},
                       {"window", json::array({0.0, 2.0})}};
    REQUIRE(cfg::function(fn_spec, m).integral == Catch::Approx(1.0));
}

TEST_CASE("runs are deterministic and reports validate") {
    const json config = minimal_scenario();
    const Report a = run_scenario(config);
    const Report b = run_scenario(config);
    REQUIRE(a.to_text() == b.to_text());
    REQUIRE(a.pass());
    REQUIRE(a.records.size() == 4);  // one chi value + swap + two additivity rows

    std::string err;
    REQUIRE(validate_report_json(nlohmann::json::parse(a.to_text()), &err));

    nlohmann::json corrupted = nlohmann::json::parse(a.to_text());
    corrupted.erase("seed");
    REQUIRE(!validate_report_json(corrupted, &err));
    REQUIRE(err == "missing key: seed");

    // seed override changes the recorded seed
    const Report c = run_scenario(config, 1.0, 123456);
    REQUIRE(c.seed == 123456);
}

TEST_CASE("csv emission schema") {
    json config{{"schema_version", 1},
                {"name", "profile"},
                {"seed", 7},
                {"checks", json::array({json{{"check", "zero_type"}, {"g_max", 2},
                                             {"mc_trials", 0}}})}};
    const Report rep = run_scenario(config);
    REQUIRE(!rep.tables.empty());
    const CsvTable& t = rep.tables.front();
    REQUIRE(t.columns == std::vector<std::string>{"g", "norm", "term"});
    const std::string text = t.to_string();
    REQUIRE(text.rfind("g,norm,term\n", 0) == 0);
    // deterministic serialization
    REQUIRE(t.to_string() == text);
}

TEST_CASE("trials scaling keeps checks runnable") {
    json config{{"schema_version", 1},
                {"name", "scaled"},
                {"seed", 11},
                {"checks", json::array({json{{"check", "coherent_normalization"},
                                             {"trials", 5000}}})}};
    const Report rep = run_scenario(config, 0.5);
    REQUIRE(rep.records.size() == 3);
}
