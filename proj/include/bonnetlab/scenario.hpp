#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "bonnetlab/bonnet.hpp"
#include "bonnetlab/csv.hpp"
#include "bonnetlab/errors.hpp"
#include "bonnetlab/expr.hpp"
#include "bonnetlab/solver.hpp"

namespace bonnetlab {

/// One generating field: either a closed-form expression or a CSV reference
/// (resolved relative to the scenario file).
struct FieldSource {
    std::string expression; // empty when csv is set
    std::filesystem::path csv;

    ScalarField2 build(const Grid2& grid, const std::filesystem::path& base_dir) const {
        if (!csv.empty()) {
            const auto path = csv.is_absolute() ? csv : base_dir / csv;
            FieldCsv loaded = read_field_csv_file(path.string());
            if (!(loaded.field.grid() == grid))
                throw ConfigError("SCHEMA_CSV_GRID",
                                  "csv grid in '" + path.string() + "' differs from scenario grid");
            return loaded.field;
        }
        return expr::sample(expr::parse(expression), grid);
    }
};

/// Validated scenario file contents.
struct Scenario {
    std::string name;
    int n = 3;
    std::optional<LinearFactor> linfac;
    Grid2 grid;
    std::optional<Grid3> grid3;
    FieldSource frakH, frakJ, theta;
    Variant variant = Variant::DerivationConsistent;
    double check_tol = 1e-10;
    std::optional<SolveConfig> solve;
    std::filesystem::path base_dir;

    BonnetFields build_fields() const {
        return BonnetFields::make(frakH.build(grid, base_dir), frakJ.build(grid, base_dir),
                                  theta.build(grid, base_dir), linfac, n);
    }

    const Grid3* grid3_ptr() const { return grid3 ? &*grid3 : nullptr; }
};

namespace detail {

inline void reject_unknown_keys(const Json& obj, const std::set<std::string>& allowed,
                                const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key()))
            throw ConfigError("SCHEMA_UNKNOWN_FIELD",
                              "unknown field '" + it.key() + "' in " + where);
}

inline const Json& require(const Json& obj, const std::string& key, const std::string& where) {
    if (!obj.contains(key))
        throw ConfigError("SCHEMA_MISSING_FIELD", "missing field '" + key + "' in " + where);
    return obj.at(key);
}

inline double number_at(const Json& j, const std::string& where) {
    if (!j.is_number()) throw ConfigError("SCHEMA_TYPE", where + " must be a number");
    return j.get<double>();
}

inline int int_at(const Json& j, const std::string& where) {
    if (!j.is_number_integer()) throw ConfigError("SCHEMA_TYPE", where + " must be an integer");
    return j.get<int>();
}

inline FieldSource field_source(const Json& j, const std::string& where) {
    FieldSource src;
    if (j.is_string()) {
        src.expression = j.get<std::string>();
        return src;
    }
    if (j.is_object()) {
        reject_unknown_keys(j, {"csv"}, where);
        src.csv = require(j, "csv", where).get<std::string>();
        return src;
    }
    throw ConfigError("SCHEMA_TYPE", where + " must be an expression string or {\"csv\": path}");
}

inline std::array<double, 3> axis_spec(const Json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 3)
        throw ConfigError("SCHEMA_TYPE", where + " must be [min, max, nodes]");
    return {number_at(j[0], where), number_at(j[1], where),
            static_cast<double>(int_at(j[2], where))};
}

} // namespace detail

inline Scenario parse_scenario(const Json& j, const std::filesystem::path& base_dir) {
    detail::reject_unknown_keys(
        j, {"schema", "name", "n", "case", "grid", "fields", "variant", "tolerances", "solve"},
        "scenario");
    if (detail::int_at(detail::require(j, "schema", "scenario"), "schema") != 1)
        throw ConfigError("SCHEMA_VERSION", "unsupported schema version (want 1)");

    Scenario sc;
    sc.base_dir = base_dir;
    sc.name = detail::require(j, "name", "scenario").get<std::string>();
    sc.n = detail::int_at(detail::require(j, "n", "scenario"), "n");

    const Json& jcase = detail::require(j, "case", "scenario");
    detail::reject_unknown_keys(jcase, {"type", "C"}, "case");
    const std::string type = detail::require(jcase, "type", "case").get<std::string>();
    if (type == "one") {
        const Json& jc = detail::require(jcase, "C", "case");
        if (!jc.is_array() || jc.empty())
            throw ConfigError("SCHEMA_TYPE", "case.C must be a nonempty array");
        std::vector<double> cs;
        for (const auto& v : jc) cs.push_back(detail::number_at(v, "case.C"));
        try {
            sc.linfac = LinearFactor(std::move(cs));
        } catch (const InvariantError& e) {
            throw ConfigError(e.code(), e.what());
        }
    } else if (type != "two") {
        throw ConfigError("SCHEMA_TYPE", "case.type must be \"one\" or \"two\"");
    }

    const Json& jgrid = detail::require(j, "grid", "scenario");
    detail::reject_unknown_keys(jgrid, {"x1", "x2", "sigma"}, "grid");
    const auto a1 = detail::axis_spec(detail::require(jgrid, "x1", "grid"), "grid.x1");
    const auto a2 = detail::axis_spec(detail::require(jgrid, "x2", "grid"), "grid.x2");
    try {
        sc.grid = Grid2(a1[0], a1[1], static_cast<int>(a1[2]), a2[0], a2[1],
                        static_cast<int>(a2[2]));
    } catch (const Error& e) {
        throw ConfigError("SCHEMA_GRID", e.what());
    }
    if (jgrid.contains("sigma")) {
        const auto a3 = detail::axis_spec(jgrid.at("sigma"), "grid.sigma");
        if (sc.linfac && !(a3[0] > 0.0))
            throw ConfigError("DOMAIN_S_ZERO",
                              "Case 1 sigma range must stay strictly positive (s never vanishes)");
        try {
            sc.grid3 = Grid3(sc.grid, a3[0], a3[1], static_cast<int>(a3[2]));
        } catch (const Error& e) {
            throw ConfigError("SCHEMA_GRID", e.what());
        }
    } else if (sc.linfac) {
        throw ConfigError("SCHEMA_MISSING_FIELD", "Case 1 scenarios need grid.sigma");
    }

    const Json& jfields = detail::require(j, "fields", "scenario");
    detail::reject_unknown_keys(jfields, {"frakH", "frakJ", "theta"}, "fields");
    sc.frakH = detail::field_source(detail::require(jfields, "frakH", "fields"), "fields.frakH");
    sc.frakJ = detail::field_source(detail::require(jfields, "frakJ", "fields"), "fields.frakJ");
    sc.theta = detail::field_source(detail::require(jfields, "theta", "fields"), "fields.theta");

    if (j.contains("variant")) {
        const std::string v = j.at("variant").get<std::string>();
        if (v == "derivation-consistent")
            sc.variant = Variant::DerivationConsistent;
        else if (v == "as-printed")
            sc.variant = Variant::AsPrinted;
        else
            throw ConfigError("SCHEMA_TYPE",
                              "variant must be \"derivation-consistent\" or \"as-printed\"");
    }
    if (j.contains("tolerances")) {
        const Json& jt = j.at("tolerances");
        detail::reject_unknown_keys(jt, {"check"}, "tolerances");
        if (jt.contains("check")) {
            sc.check_tol = detail::number_at(jt.at("check"), "tolerances.check");
            if (!(sc.check_tol > 0.0))
                throw ConfigError("SCHEMA_TYPE", "tolerances.check must be positive");
        }
    }
    if (j.contains("solve")) {
        const Json& js = j.at("solve");
        detail::reject_unknown_keys(js, {"unknowns", "anchors", "tol", "max_iter", "damping"},
                                    "solve");
        SolveConfig cfg;
        cfg.grid = sc.grid;
        cfg.linfac = sc.linfac;
        cfg.n = sc.n;
        for (const auto& ju : detail::require(js, "unknowns", "solve")) {
            const std::string u = ju.get<std::string>();
            if (u == "frakH")
                cfg.unknowns.push_back(FieldId::FrakH);
            else if (u == "frakJ")
                cfg.unknowns.push_back(FieldId::FrakJ);
            else if (u == "theta")
                cfg.unknowns.push_back(FieldId::Theta);
            else
                throw ConfigError("SCHEMA_TYPE", "unknown solve field '" + u + "'");
        }
        const Json& janchors = detail::require(js, "anchors", "solve");
        for (const auto& ja : janchors) {
            detail::reject_unknown_keys(ja, {"node", "field", "value"}, "anchor");
            Anchor a;
            const Json& jn = detail::require(ja, "node", "anchor");
            if (!jn.is_array() || jn.size() != 2)
                throw ConfigError("SCHEMA_TYPE", "anchor.node must be [i, j]");
            a.i = detail::int_at(jn[0], "anchor.node");
            a.j = detail::int_at(jn[1], "anchor.node");
            const std::string f = detail::require(ja, "field", "anchor").get<std::string>();
            if (f == "frakH")
                a.field = FieldId::FrakH;
            else if (f == "frakJ")
                a.field = FieldId::FrakJ;
            else if (f == "theta")
                a.field = FieldId::Theta;
            else
                throw ConfigError("SCHEMA_TYPE", "unknown anchor field '" + f + "'");
            a.value = detail::number_at(detail::require(ja, "value", "anchor"), "anchor.value");
            cfg.anchors.push_back(a);
        }
        if (js.contains("tol")) cfg.tol = detail::number_at(js.at("tol"), "solve.tol");
        if (js.contains("max_iter"))
            cfg.max_iter = detail::int_at(js.at("max_iter"), "solve.max_iter");
        if (js.contains("damping"))
            cfg.damping = detail::number_at(js.at("damping"), "solve.damping");
        cfg.validate();
        sc.solve = std::move(cfg);
    }
    return sc;
}

inline Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open scenario '" + path.string() + "'");
    Json j;
    try {
        j = Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("SCHEMA_PARSE", std::string("scenario is not valid JSON: ") + e.what());
    }
    return parse_scenario(j, path.parent_path());
}

} // namespace bonnetlab
