#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bonnetlab/field.hpp"
#include "bonnetlab/grid.hpp"

namespace bonnetlab {

using Json = nlohmann::ordered_json;

/// One named residual: full-grid and interior-ring norms, the tolerance it
/// was judged against, and (when it comes from a per-node field) a 2D
/// magnitude map for rendering.
struct ResidualEntry {
    std::string key;
    NormPair full;
    NormPair interior;
    double tolerance = 0.0;
    bool pass = true;
    std::optional<ScalarField2> heat;

    static ResidualEntry judge(std::string key, NormPair full_norms, NormPair interior_norms,
                               double tol, std::optional<ScalarField2> heat_field = std::nullopt) {
        ResidualEntry e;
        e.key = std::move(key);
        e.full = full_norms;
        e.interior = interior_norms;
        e.tolerance = tol;
        e.pass = full_norms.linf <= tol;
        e.heat = std::move(heat_field);
        return e;
    }
};

struct ResidualReport {
    std::string name;
    std::vector<ResidualEntry> entries;

    bool all_pass() const {
        for (const auto& e : entries)
            if (!e.pass) return false;
        return true;
    }

    const ResidualEntry* find(const std::string& key) const {
        for (const auto& e : entries)
            if (e.key == key) return &e;
        return nullptr;
    }

    ResidualEntry& add(ResidualEntry e) {
        entries.push_back(std::move(e));
        return entries.back();
    }

    void merge(const ResidualReport& other, const std::string& prefix = "") {
        for (const auto& e : other.entries) {
            entries.push_back(e);
            entries.back().key = prefix + e.key;
        }
    }

    Json to_json() const {
        Json j;
        j["schema"] = 1;
        j["name"] = name;
        j["pass"] = all_pass();
        Json list = Json::array();
        for (const auto& e : entries) {
            Json je;
            je["key"] = e.key;
            je["linf"] = e.full.linf;
            je["l2"] = e.full.l2;
            je["linf_interior"] = e.interior.linf;
            je["l2_interior"] = e.interior.l2;
            je["tol"] = e.tolerance;
            je["pass"] = e.pass;
            if (e.heat) {
                const Grid2& g = e.heat->grid();
                Json jh;
                jh["n1"] = g.n1;
                jh["n2"] = g.n2;
                jh["x1"] = Json::array({g.x1_min, g.x1_max});
                jh["x2"] = Json::array({g.x2_min, g.x2_max});
                jh["values"] = e.heat->values();
                je["heat"] = std::move(jh);
            }
            list.push_back(std::move(je));
        }
        j["entries"] = std::move(list);
        return j;
    }

    static ResidualReport from_json(const Json& j) {
        ResidualReport r;
        r.name = j.at("name").get<std::string>();
        for (const auto& je : j.at("entries")) {
            ResidualEntry e;
            e.key = je.at("key").get<std::string>();
            e.full = {je.at("linf").get<double>(), je.at("l2").get<double>()};
            e.interior = {je.at("linf_interior").get<double>(), je.at("l2_interior").get<double>()};
            e.tolerance = je.at("tol").get<double>();
            e.pass = je.at("pass").get<bool>();
            if (je.contains("heat")) {
                const auto& jh = je.at("heat");
                Grid2 grid(jh.at("x1")[0].get<double>(), jh.at("x1")[1].get<double>(),
                           jh.at("n1").get<int>(), jh.at("x2")[0].get<double>(),
                           jh.at("x2")[1].get<double>(), jh.at("n2").get<int>());
                e.heat = ScalarField2(grid, jh.at("values").get<std::vector<double>>());
            }
            r.entries.push_back(std::move(e));
        }
        return r;
    }
};

} // namespace bonnetlab
