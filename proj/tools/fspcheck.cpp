#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "fsp/harness.hpp"

namespace {

int check_exit(bool any_fail, bool expect_fail) {
    if (expect_fail) return any_fail ? 0 : 1;
    return any_fail ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spectral-element metric and freestream preservation checker"};
    app.require_subcommand(1);

    std::string config_file;
    bool expect_fail = false;
    std::vector<std::pair<std::string, std::string>> overrides;

    app.add_option("--config", config_file, "configuration file with 'key = value' lines");
    app.add_flag("--expect-fail", expect_fail,
                 "invert the check exit status (0 when the check fails)");
    const auto add_key = [&](const std::string& key, const std::string& desc) {
        app.add_option_function<std::string>(
            "--" + key,
            [&overrides, key](const std::string& v) { overrides.emplace_back(key, v); }, desc);
    };
    add_key("K", "lattice elements per axis (default 2)");
    add_key("refine", "comma-separated lattice ids to refine 8:1, or 'none' (default 0)");
    add_key("amplitude", "deformation amplitude (default 0.05)");
    add_key("extruded", "use the z-extruded deformation (default false)");
    add_key("Ng", "geometry polynomial degree (default 4)");
    add_key("N", "solution polynomial degree (default 4)");
    add_key("node_kind", "gauss or lobatto (default gauss)");
    add_key("cfl", "time step safety factor (default 0.5)");
    add_key("T", "final simulated time (default 0.5)");
    add_key("M", "overintegration degree, -1 for the 2N default");
    add_key("strategy",
            "cross_product, curl_form, parent_inherited, or overintegrated (default curl_form)");
    add_key("rho", "freestream density (default 0.7)");
    add_key("v1", "freestream x velocity (default 0.2)");
    add_key("v2", "freestream y velocity (default 0.3)");
    add_key("v3", "freestream z velocity (default -0.4)");
    add_key("p", "freestream pressure (default 1.0)");
    add_key("output", "write the report to this file instead of stdout");
    add_key("seed", "seed for randomized demonstrations (default 2024)");
    add_key("N_min", "sweep lower solution degree (default 1)");
    add_key("N_max", "sweep upper solution degree (default 8)");
    add_key("Ng_min", "sweep lower geometry degree (default 1)");
    add_key("Ng_max", "sweep upper geometry degree (default 4)");
    add_key("strategies", "comma-separated sweep strategies (default curl_form)");
    add_key("node_kinds", "comma-separated sweep node kinds (default gauss)");

    CLI::App* cmd_metrics =
        app.add_subcommand("check-metrics", "emit per-element / per-face residual CSV");
    CLI::App* cmd_watertight =
        app.add_subcommand("watertight", "validate topology and interface gaps");
    CLI::App* cmd_appendix =
        app.add_subcommand("appendix-demo", "product interpolation mismatch demonstration");
    CLI::App* cmd_run =
        app.add_subcommand("run-freestream", "single freestream preservation run (CSV row)");
    CLI::App* cmd_sweep = app.add_subcommand("sweep", "freestream sweep over (strategy, Ng, N)");
    for (CLI::App* sub : {cmd_metrics, cmd_watertight, cmd_appendix, cmd_run, cmd_sweep})
        sub->fallthrough();

    CLI11_PARSE(app, argc, argv);

    fsp::RunConfig cfg;
    try {
        if (!config_file.empty()) {
            std::ifstream in(config_file);
            if (!in) throw fsp::ConfigError("cannot open config file '" + config_file + "'");
            std::stringstream ss;
            ss << in.rdbuf();
            cfg = fsp::parse_config_text(ss.str(), config_file);
        }
        for (const auto& [key, value] : overrides)
            fsp::apply_config_entry(cfg, key, value, "flag --" + key);
        fsp::validate_config(cfg);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }

    const auto emit = [&](const std::string& text) {
        if (cfg.output_path.empty()) {
            std::cout << text;
            return true;
        }
        std::ofstream out(cfg.output_path);
        if (!out) {
            std::cerr << "cannot write output file '" << cfg.output_path << "'\n";
            return false;
        }
        out << text;
        return true;
    };

    try {
        if (cmd_metrics->parsed()) {
            bool any_fail = false;
            const std::string csv = fsp::check_metrics_csv(cfg, &any_fail);
            if (!emit(csv)) return 2;
            return check_exit(any_fail, expect_fail);
        }
        if (cmd_watertight->parsed()) {
            const fsp::CheckReport rep = fsp::watertight_check(cfg);
            if (!emit(rep.text)) return 2;
            return check_exit(rep.any_fail, expect_fail);
        }
        if (cmd_appendix->parsed()) {
            const fsp::CheckReport rep = fsp::appendix_demo(cfg);
            if (!emit(rep.text)) return 2;
            return check_exit(rep.any_fail, expect_fail);
        }
        if (cmd_run->parsed()) {
            const fsp::FreestreamReport rep = fsp::run_freestream(cfg);
            if (!emit(fsp::freestream_csv_header() + fsp::freestream_csv_row(rep))) return 2;
            return 0;
        }
        if (cmd_sweep->parsed()) {
            if (!emit(fsp::sweep_csv(cfg))) return 2;
            return 0;
        }
    } catch (const fsp::BlowUpError& e) {
        std::cerr << "solver blow-up: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
