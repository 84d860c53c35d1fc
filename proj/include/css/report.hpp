#pragma once

#include "grid.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace css {

/// One checked quantity. Passes when |computed - expected| <= tol * max(1, |expected|).
struct ReportRow {
    std::string name;
    double computed = 0;
    double expected = 0;
    double tol = 0;
    std::string note;

    double error() const { return std::abs(computed - expected); }
    double allowed() const { return tol * std::max(1.0, std::abs(expected)); }
    bool pass() const { return std::isfinite(computed) && error() <= allowed(); }

    nlohmann::json to_json() const {
        return {{"name", name}, {"computed", computed}, {"expected", expected}, {"tol", tol},
                {"error", error()}, {"pass", pass()}, {"note", note}};
    }
};

struct Report {
    std::vector<ReportRow> rows;

    void add(std::string name, double computed, double expected, double tol, std::string note = {}) {
        rows.push_back({std::move(name), computed, expected, tol, std::move(note)});
    }
    bool all_pass() const {
        for (const auto& r : rows)
            if (!r.pass()) return false;
        return true;
    }
    nlohmann::json to_json() const {
        nlohmann::json a = nlohmann::json::array();
        for (const auto& r : rows) a.push_back(r.to_json());
        return {{"rows", a}, {"pass", all_pass()}};
    }
    void write_csv(std::ostream& os) const {
        os << "name,computed,expected,tol,error,pass\n";
        for (const auto& r : rows)
            os << r.name << ',' << format_g17(r.computed) << ',' << format_g17(r.expected) << ','
               << format_g17(r.tol) << ',' << format_g17(r.error()) << ',' << (r.pass() ? 1 : 0) << '\n';
    }
};

struct Tolerances {
    double identity_tol = 1e-4;
    double mass_tol = 1e-2;
    double descent_tol = 1e-5;
};

struct RunConfig {
    double L = 12.0;
    int M = 256;
    Tolerances tol;
    unsigned seed = 42;
    std::string output_dir = ".";

    Grid grid() const { return Grid(L, M); }

    void validate() const {
        Grid g(L, M);
        (void)g;
        if (!(tol.identity_tol > 0) || !(tol.mass_tol > 0) || !(tol.descent_tol > 0))
            throw std::invalid_argument("tolerances must be positive");
    }

    nlohmann::json to_json() const {
        return {{"grid", {{"L", L}, {"M", M}}},
                {"tolerances", {{"identity_tol", tol.identity_tol}, {"mass_tol", tol.mass_tol}, {"descent_tol", tol.descent_tol}}},
                {"seed", seed},
                {"output_dir", output_dir}};
    }

    static RunConfig from_json(const nlohmann::json& j) {
        RunConfig c;
        if (j.contains("grid")) {
            c.L = j.at("grid").value("L", c.L);
            c.M = j.at("grid").value("M", c.M);
        }
        if (j.contains("tolerances")) {
            const auto& t = j.at("tolerances");
            c.tol.identity_tol = t.value("identity_tol", c.tol.identity_tol);
            c.tol.mass_tol = t.value("mass_tol", c.tol.mass_tol);
            c.tol.descent_tol = t.value("descent_tol", c.tol.descent_tol);
        }
        c.seed = j.value("seed", c.seed);
        c.output_dir = j.value("output_dir", c.output_dir);
        c.validate();
        return c;
    }
};

/// "L,M" as given on the command line
inline std::pair<double, int> parse_grid_spec(const std::string& s) {
    auto comma = s.find(',');
    if (comma == std::string::npos) throw std::invalid_argument("grid must be given as L,M");
    std::size_t used = 0;
    double L = std::stod(s.substr(0, comma), &used);
    if (used != comma) throw std::invalid_argument("grid must be given as L,M");
    std::string ms = s.substr(comma + 1);
    int M = std::stoi(ms, &used);
    if (used != ms.size()) throw std::invalid_argument("grid must be given as L,M");
    Grid g(L, M);  // validates
    return {L, M};
}

/// "a:b:step" inclusive range, or a comma-separated list
inline std::vector<double> parse_beta_list(const std::string& s) {
    std::vector<double> out;
    if (s.find(':') != std::string::npos) {
        std::vector<double> p;
        std::stringstream ss(s);
        std::string item;
        while (std::getline(ss, item, ':')) p.push_back(std::stod(item));
        if (p.size() != 3 || !(p[2] > 0) || p[1] < p[0]) throw std::invalid_argument("range must be start:stop:step");
        long n = std::lround(std::floor((p[1] - p[0]) / p[2] + 1e-9));
        for (long k = 0; k <= n; ++k) out.push_back(p[0] + k * p[2]);
        return out;
    }
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
    if (out.empty()) throw std::invalid_argument("empty beta list");
    return out;
}

}  // namespace css
