// bonnetlab command-line front end: construct / check / solve / report.

#include <optional>
#include <string>

#include <CLI11.hpp>

#include "bonnetlab/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Bonnet hypersurface pairs: construction, verification, solving"};
    app.require_subcommand(1);

    std::string scenario_path, input_path, report_path;
    std::string out_dir = "out";
    double tol = -1.0;
    bool interior_only = false;
    std::string variant;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--tol", tol, "override the pass/fail tolerance");
        cmd->add_flag("--interior-only", interior_only,
                      "judge interior-ring norms instead of full-grid norms");
        cmd->add_option("--variant", variant,
                        "b11/b22 variant: derivation-consistent (default) or as-printed");
    };

    CLI::App* construct = app.add_subcommand("construct", "build (M, M') tensor CSVs + manifest");
    construct->add_option("scenario", scenario_path, "scenario JSON")->required();
    construct->add_option("--out", out_dir, "output directory");
    add_common(construct);

    CLI::App* check = app.add_subcommand("check", "run the residual suite, report JSON to stdout");
    check->add_option("input", input_path, "scenario JSON or construct manifest")->required();
    add_common(check);

    CLI::App* solve = app.add_subcommand("solve", "Gauss-Newton solve of the master constraints");
    solve->add_option("scenario", scenario_path, "scenario JSON with a solve config")->required();
    solve->add_option("--out", out_dir, "output directory");
    add_common(solve);

    CLI::App* report = app.add_subcommand("report", "render SVG heatmaps from a check report");
    report->add_option("check_output", report_path, "JSON produced by `check`")->required();
    report->add_option("--out", out_dir, "output directory");

    CLI11_PARSE(app, argc, argv);

    namespace cli = bonnetlab::cli;
    cli::CliOptions opts;
    if (tol > 0.0) opts.tol = tol;
    opts.interior_only = interior_only;
    if (!variant.empty()) {
        if (variant == "derivation-consistent")
            opts.variant = bonnetlab::Variant::DerivationConsistent;
        else if (variant == "as-printed")
            opts.variant = bonnetlab::Variant::AsPrinted;
        else {
            std::cerr << R"({"error":{"code":"SCHEMA_TYPE","message":"bad --variant value"}})"
                      << "\n";
            return cli::kExitInputError;
        }
    }

    if (construct->parsed())
        return cli::run_guarded([&] { return cli::cmd_construct(scenario_path, out_dir, opts); });
    if (check->parsed())
        return cli::run_guarded([&] { return cli::cmd_check(input_path, opts); });
    if (solve->parsed())
        return cli::run_guarded([&] { return cli::cmd_solve(scenario_path, out_dir, opts); });
    return cli::run_guarded([&] { return cli::cmd_report(report_path, out_dir); });
}
