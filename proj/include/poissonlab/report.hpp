#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include <json.hpp>

namespace poissonlab {

inline constexpr const char* kVersion = "poissonlab 1.0.0";

// One verified statement: stochastic records carry (estimate, target, se, z),
// deterministic ones (value, target, tol, residual).
struct CheckRecord {
    std::string name;
    std::string kind = "stochastic";  // or "deterministic"
    double estimate = 0.0;
    double target = 0.0;
    double se_or_tol = 0.0;
    double z_or_residual = 0.0;
    bool pass = false;
    std::string note;

    static CheckRecord stochastic(std::string name, double estimate, double target, double se,
                                  double z_gate = 4.0, std::string note = {}) {
        CheckRecord r;
        r.name = std::move(name);
        r.kind = "stochastic";
        r.estimate = estimate;
        r.target = target;
        r.se_or_tol = se;
        r.z_or_residual = se > 0.0 ? (estimate - target) / se : 0.0;
        r.pass = std::abs(r.z_or_residual) <= z_gate;
        r.note = std::move(note);
        return r;
    }

    static CheckRecord deterministic(std::string name, double value, double target, double tol,
                                     std::string note = {}) {
        CheckRecord r;
        r.name = std::move(name);
        r.kind = "deterministic";
        r.estimate = value;
        r.target = target;
        r.se_or_tol = tol;
        r.z_or_residual = std::abs(value - target);
        r.pass = r.z_or_residual <= tol;
        r.note = std::move(note);
        return r;
    }

    static CheckRecord gate(std::string name, bool pass, double value = 0.0,
                            std::string note = {}) {
        CheckRecord r;
        r.name = std::move(name);
        r.kind = "deterministic";
        r.estimate = value;
        r.pass = pass;
        r.note = std::move(note);
        return r;
    }
};

// CSV side-channel emitted next to the structured report.
struct CsvTable {
    std::string name;  // file stem
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    std::string to_string() const {
        std::string out;
        for (std::size_t i = 0; i < columns.size(); ++i) {
            out += columns[i];
            out += (i + 1 < columns.size()) ? ',' : '\n';
        }
        char buf[64];
        for (const auto& row : rows) {
            for (std::size_t i = 0; i < row.size(); ++i) {
                std::snprintf(buf, sizeof(buf), "%.17g", row[i]);
                out += buf;
                out += (i + 1 < row.size()) ? ',' : '\n';
            }
        }
        return out;
    }
};

struct Report {
    std::string scenario;
    std::uint64_t seed = 0;
    std::vector<CheckRecord> records;
    std::vector<CsvTable> tables;

    bool pass() const {
        for (const auto& r : records) {
            if (!r.pass) return false;
        }
        return true;
    }

    // Deterministic serialization: identical (config, seed) pairs must give
    // byte-identical files, so no timestamps or runtimes appear here.
    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["schema_version"] = 1;
        j["scenario"] = scenario;
        j["seed"] = seed;
        j["version"] = kVersion;
        j["pass"] = pass();
        nlohmann::ordered_json checks = nlohmann::ordered_json::array();
        for (const auto& r : records) {
            nlohmann::ordered_json c;
            c["name"] = r.name;
            c["kind"] = r.kind;
            c["estimate"] = r.estimate;
            c["target"] = r.target;
            c["se_or_tol"] = r.se_or_tol;
            c["z_or_residual"] = r.z_or_residual;
            c["pass"] = r.pass;
            if (!r.note.empty()) c["note"] = r.note;
            checks.push_back(c);
        }
        j["checks"] = checks;
        return j;
    }

    std::string to_text() const { return to_json().dump(2) + "\n"; }
};

// Schema validation for emitted reports (the round-trip validator).
inline bool validate_report_json(const nlohmann::json& j, std::string* error = nullptr) {
    auto fail = [&](const std::string& msg) {
        if (error) *error = msg;
        return false;
    };
    if (!j.is_object()) return fail("report is not an object");
    for (const char* key : {"schema_version", "scenario", "seed", "version", "pass", "checks"}) {
        if (!j.contains(key)) return fail(std::string("missing key: ") + key);
    }
    if (j["schema_version"] != 1) return fail("unknown schema_version");
    if (!j["checks"].is_array()) return fail("checks is not an array");
    for (const auto& c : j["checks"]) {
        for (const char* key : {"name", "kind", "estimate", "target", "se_or_tol",
                                "z_or_residual", "pass"}) {
            if (!c.contains(key)) return fail(std::string("check missing key: ") + key);
        }
        if (c["kind"] != "stochastic" && c["kind"] != "deterministic") {
            return fail("unknown check kind");
        }
    }
    return true;
}

}  // namespace poissonlab
