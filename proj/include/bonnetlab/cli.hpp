#pragma once

#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include <json.hpp>

#include "bonnetlab/bonnet.hpp"
#include "bonnetlab/csv.hpp"
#include "bonnetlab/report.hpp"
#include "bonnetlab/scenario.hpp"
#include "bonnetlab/solver.hpp"
#include "bonnetlab/svg.hpp"

namespace bonnetlab::cli {

namespace fs = std::filesystem;

struct CliOptions {
    std::optional<double> tol;
    bool interior_only = false;
    std::optional<Variant> variant;
};

// exit codes: 0 pass, 1 quantitative failure, 2 input/config error
inline constexpr int kExitPass = 0;
inline constexpr int kExitFail = 1;
inline constexpr int kExitInputError = 2;

namespace detail {

inline std::string iso8601_utc_now() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline std::string sanitize_filename(const std::string& key) {
    std::string out;
    for (char c : key)
        out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
    return out;
}

inline void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << text;
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

inline void rejudge_interior(ResidualReport& rep) {
    for (auto& e : rep.entries) e.pass = e.interior.linf <= e.tolerance;
}

inline Json case_json(const std::optional<LinearFactor>& linfac) {
    Json jc;
    if (linfac) {
        jc["type"] = "one";
        jc["C"] = linfac->coefficients;
    } else {
        jc["type"] = "two";
    }
    return jc;
}

inline void add_anet_entries(ResidualReport& rep, const TensorData& tdM, const TensorData& tdMp,
                             const std::optional<LinearFactor>& linfac, double tol,
                             const Grid3* grid3) {
    const double anet_tol = std::max(tol, 1e-9);
    for (const auto& [label, td] : {std::pair<const char*, const TensorData*>{"M:anet", &tdM},
                                    {"Mprime:anet", &tdMp}}) {
        const AnetVerdict v = detect_anet(*td, linfac, anet_tol, grid3);
        double dev = 0.0;
        for (const auto& d : v.diagnostics)
            if (!d.pass) dev = std::max(dev, d.deviation);
        ResidualEntry e;
        e.key = label;
        e.full = {dev, dev};
        e.interior = {dev, dev};
        e.tolerance = anet_tol;
        e.pass = v.is_anet;
        rep.add(std::move(e));
    }
}

struct ManifestData {
    FundamentalPair pair;
    std::optional<Grid3> grid3;
    double tol = 1e-10;
};

inline ManifestData load_manifest(const Json& j, const fs::path& base_dir) {
    ManifestData md{FundamentalPair{}, std::nullopt, 1e-10};
    FundamentalData& M = md.pair.M;
    FundamentalData& Mp = md.pair.Mprime;
    M.n = Mp.n = j.at("n").get<int>();
    const Json& jc = j.at("case");
    if (jc.at("type").get<std::string>() == "one") {
        M.linfac = LinearFactor(jc.at("C").get<std::vector<double>>());
        Mp.linfac = M.linfac;
    }
    M.epsilon = j.at("epsilon").get<double>();
    Mp.epsilon = -M.epsilon;

    std::map<std::string, SeparableComponent> loaded;
    for (const auto& jcomp : j.at("components")) {
        const std::string surface = jcomp.at("surface").get<std::string>();
        const std::string component = jcomp.at("component").get<std::string>();
        const fs::path file = base_dir / jcomp.at("file").get<std::string>();
        FieldCsv csv = read_field_csv_file(file.string());
        const int s_power = csv.tag ? csv.tag->s_power : 0;
        loaded.emplace(surface + ":" + component,
                       SeparableComponent(std::move(csv.field), s_power));
    }
    auto take = [&](const std::string& key) {
        auto it = loaded.find(key);
        if (it == loaded.end()) throw IoError("manifest missing component " + key);
        return it->second;
    };
    M.g11 = take("M:g11");
    M.b11 = take("M:b11");
    M.b22 = take("M:b22");
    M.b12 = take("M:b12");
    Mp.g11 = take("Mprime:g11");
    Mp.b11 = take("Mprime:b11");
    Mp.b22 = take("Mprime:b22");
    Mp.b12 = take("Mprime:b12");

    if (j.contains("sigma")) {
        const auto& js = j.at("sigma");
        md.grid3 = Grid3(M.g11.grid(), js[0].get<double>(), js[1].get<double>(),
                         js[2].get<int>());
    }
    if (j.contains("tol")) md.tol = j.at("tol").get<double>();
    return md;
}

} // namespace detail

/// construct: build the (M, M') tensors and dump one CSV per component plus
/// a manifest. The manifest carries the only timestamp; data files are
/// byte-deterministic.
inline int cmd_construct(const fs::path& scenario_path, const fs::path& out_dir,
                         const CliOptions& opts = {}) {
    const Scenario sc = load_scenario(scenario_path);
    const BonnetFields F = sc.build_fields();
    const Variant variant = opts.variant.value_or(sc.variant);
    const FundamentalPair pair = construct_pair(F, variant);

    fs::create_directories(out_dir);
    Json manifest;
    manifest["schema"] = 1;
    manifest["name"] = sc.name;
    manifest["n"] = sc.n;
    manifest["case"] = detail::case_json(sc.linfac);
    manifest["epsilon"] = F.epsilon;
    manifest["variant"] =
        (variant == Variant::DerivationConsistent) ? "derivation-consistent" : "as-printed";
    manifest["grid"] = {{"x1", {sc.grid.x1_min, sc.grid.x1_max, sc.grid.n1}},
                        {"x2", {sc.grid.x2_min, sc.grid.x2_max, sc.grid.n2}}};
    if (sc.grid3) manifest["sigma"] = {sc.grid3->sigma_min, sc.grid3->sigma_max, sc.grid3->n3};
    manifest["tol"] = opts.tol.value_or(sc.check_tol);

    Json components = Json::array();
    auto dump = [&](const char* surface, const char* name, const SeparableComponent& scmp) {
        const std::string file = std::string(surface) + "_" + name + ".csv";
        write_field_csv((out_dir / file).string(), scmp.base,
                        ComponentTag{name, scmp.s_power});
        components.push_back(
            Json{{"surface", surface}, {"component", name}, {"s_power", scmp.s_power},
                 {"file", file}});
    };
    dump("M", "g11", pair.M.g11);
    dump("M", "b11", pair.M.b11);
    dump("M", "b22", pair.M.b22);
    dump("M", "b12", pair.M.b12);
    dump("Mprime", "g11", pair.Mprime.g11);
    dump("Mprime", "b11", pair.Mprime.b11);
    dump("Mprime", "b22", pair.Mprime.b22);
    dump("Mprime", "b12", pair.Mprime.b12);
    manifest["components"] = std::move(components);
    manifest["generated_at"] = detail::iso8601_utc_now();
    detail::write_text(out_dir / "manifest.json", manifest.dump(2) + "\n");
    return kExitPass;
}

/// check: every named residual of the suite against the tolerance. Accepts a
/// scenario (full suite: constraints, reduced systems, log-t, oracle, A-net,
/// pair contract) or a construct manifest (tensor-level subset).
inline int cmd_check(const fs::path& input_path, const CliOptions& opts = {},
                     std::ostream& out = std::cout) {
    std::ifstream in(input_path);
    if (!in) throw IoError("cannot open '" + input_path.string() + "'");
    Json j;
    try {
        j = Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("SCHEMA_PARSE", std::string("input is not valid JSON: ") + e.what());
    }

    ResidualReport rep;
    if (j.contains("components")) {
        detail::ManifestData md = detail::load_manifest(j, input_path.parent_path());
        const double tol = opts.tol.value_or(md.tol);
        const Grid3* g3 = md.grid3 ? &*md.grid3 : nullptr;
        rep.name = j.value("name", "tensor-dump");
        rep.merge(verify_pair(md.pair, tol, g3));
        detail::add_anet_entries(rep, md.pair.M.to_tensor(), md.pair.Mprime.to_tensor(),
                                 md.pair.M.linfac, tol, g3);
    } else {
        const Scenario sc = parse_scenario(j, input_path.parent_path());
        const double tol = opts.tol.value_or(sc.check_tol);
        const Grid3* g3 = sc.grid3_ptr();
        const BonnetFields F = sc.build_fields();
        const Variant variant = opts.variant.value_or(sc.variant);
        const FundamentalPair pair = construct_pair(F, variant);
        rep.name = sc.name;

        const ConstraintResiduals cr = constraint_residuals(F, tol);
        rep.merge(cr.report());
        const ReducedInputs ri = reduced_inputs(F);
        rep.merge(codazzi_reduced_residuals(ri.fs, ri.cs, ri.pd, g3, tol));
        rep.merge(gauss_reduced_residuals(ri.fs, ri.cs, ri.pd, F.kappa(), g3, tol));
        rep.merge(log_t_compatibility(ri.fs, ri.cs, g3, tol));
        rep.merge(verify_pair(pair, tol, g3));
        detail::add_anet_entries(rep, pair.M.to_tensor(), pair.Mprime.to_tensor(), F.linfac, tol,
                                 g3);
    }
    if (opts.interior_only) detail::rejudge_interior(rep);
    out << rep.to_json().dump(2) << "\n";
    return rep.all_pass() ? kExitPass : kExitFail;
}

/// solve: run the damped Gauss-Newton solver from the scenario's fields and
/// solve config; writes the solved fields, the iteration history, and a
/// small report.
inline int cmd_solve(const fs::path& scenario_path, const fs::path& out_dir,
                     const CliOptions& opts = {}) {
    const Scenario sc = load_scenario(scenario_path);
    if (!sc.solve)
        throw ConfigError("SCHEMA_MISSING_FIELD", "scenario has no solve configuration");
    const BonnetFields initial = sc.build_fields();

    fs::create_directories(out_dir);
    auto write_history = [&](const std::vector<double>& linf, const std::vector<double>& l2) {
        std::string csv = "iteration,linf,l2\n";
        for (std::size_t k = 0; k < linf.size(); ++k)
            csv += std::to_string(k) + "," + format_double(linf[k]) + "," +
                   format_double(k < l2.size() ? l2[k] : 0.0) + "\n";
        detail::write_text(out_dir / "history.csv", csv);
    };

    Json report;
    report["schema"] = 1;
    report["name"] = sc.name;
    try {
        const SolveResult result = least_squares_solve(*sc.solve, initial);
        write_history(result.history_linf, result.history_l2);
        write_field_csv((out_dir / "frakH.csv").string(), result.fields.frakH);
        write_field_csv((out_dir / "frakJ.csv").string(), result.fields.frakJ);
        write_field_csv((out_dir / "theta.csv").string(), result.fields.theta);
        const ConstraintResiduals cr =
            constraint_residuals(result.fields, opts.tol.value_or(sc.check_tol));
        report["converged"] = result.converged;
        report["iterations"] = result.iterations;
        report["final_linf"] = result.history_linf.back();
        report["constraints"] = cr.report().to_json();
        detail::write_text(out_dir / "solve_report.json", report.dump(2) + "\n");
        return kExitPass;
    } catch (const SolverStalled& stalled) {
        write_history(stalled.history, {});
        report["converged"] = false;
        report["final_linf"] = stalled.final_linf;
        report["error"] = stalled.what();
        detail::write_text(out_dir / "solve_report.json", report.dump(2) + "\n");
        return kExitFail;
    }
}

/// report: render one SVG heatmap per residual field of a check report plus
/// a text summary.
inline int cmd_report(const fs::path& check_json_path, const fs::path& out_dir) {
    std::ifstream in(check_json_path);
    if (!in) throw IoError("cannot open '" + check_json_path.string() + "'");
    Json j;
    try {
        j = Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("SCHEMA_PARSE", std::string("report is not valid JSON: ") + e.what());
    }
    ResidualReport rep;
    try {
        rep = ResidualReport::from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("REPORT_MALFORMED", std::string("not a residual report: ") + e.what());
    }
    if (rep.entries.empty()) throw ConfigError("REPORT_EMPTY", "report has no residual entries");

    fs::create_directories(out_dir);
    std::string summary;
    for (const auto& e : rep.entries) {
        summary += (e.pass ? "PASS " : "FAIL ") + e.key + " linf=" + format_double(e.full.linf) +
                   " l2=" + format_double(e.full.l2) +
                   " linf_interior=" + format_double(e.interior.linf) +
                   " tol=" + format_double(e.tolerance) + "\n";
        if (e.heat) {
            const std::string file = detail::sanitize_filename(e.key) + ".svg";
            const std::string title =
                e.key + " (linf=" + format_double(e.full.linf) + ")";
            detail::write_text(out_dir / file, render_heatmap_svg(*e.heat, title));
        }
    }
    detail::write_text(out_dir / "summary.txt", summary);
    return kExitPass;
}

/// Maps library errors onto the exit-code contract, writing machine-readable
/// error JSON to stderr for input/config problems.
template <typename Fn>
int run_guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const Error& e) {
        Json err;
        err["error"] = {{"code", e.code()}, {"message", e.what()}};
        std::cerr << err.dump() << "\n";
        return kExitInputError;
    } catch (const std::exception& e) {
        Json err;
        err["error"] = {{"code", "INTERNAL"}, {"message", e.what()}};
        std::cerr << err.dump() << "\n";
        return kExitInputError;
    }
}

} // namespace bonnetlab::cli
