#include <CLI11.hpp>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "pfc/pipeline.hpp"

namespace {

pfc::json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw pfc::ValidationError("cannot open " + path);
    pfc::json j;
    in >> j;
    return j;
}

void print_summary(const char* verb, const pfc::RunSummary& s) {
    std::cout << verb << ": " << s.n_ok << " item(s) ok, " << s.failures.size()
              << " failure(s)\n";
    for (const auto& f : s.failures)
        std::cerr << "  failed " << f.item << ": " << f.message << '\n';
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"pfc - power forward curves, jump detection and intensity-model testing"};
    app.require_subcommand(1);

    std::string config_path;
    std::string output_dir;
    std::string input;
    std::string curves_dir;
    std::string scenario_path;
    std::uint64_t seed = 0;
    std::size_t jobs = 0;
    std::vector<double> maturities;
    std::vector<std::string> models;
    bool include_quarterly = false;
    std::size_t max_jump_iterations = 0;
    std::vector<double> seasonality_override;

    app.add_option("--config", config_path, "JSON run configuration file")
        ->envname("PFC_CONFIG");
    app.add_option("--output", output_dir, "output directory")->envname("PFC_OUTPUT");
    app.add_option("--seed", seed, "base RNG seed")->envname("PFC_SEED");
    app.add_option("--jobs", jobs, "worker threads (0 = hardware)")->envname("PFC_JOBS");

    auto* curve_cmd = app.add_subcommand("curve", "build forward curves from a quote CSV");
    curve_cmd->add_option("--input", input, "quote CSV file")->envname("PFC_INPUT");
    curve_cmd
        ->add_flag("--include-quarterly", include_quarterly,
                   "keep quarterly contracts (excluded by default)")
        ->envname("PFC_INCLUDE_QUARTERLY");

    auto* analyze_cmd =
        app.add_subcommand("analyze", "jump detection, estimation and GOF tests on built curves");
    analyze_cmd->add_option("--curves-dir", curves_dir, "directory with curve files and index")
        ->envname("PFC_CURVES_DIR");
    analyze_cmd->add_option("--maturities", maturities, "maturity day offsets")
        ->envname("PFC_MATURITIES");
    analyze_cmd
        ->add_option("--max-jump-iterations", max_jump_iterations,
                     "detector iterations (default 2)")
        ->envname("PFC_MAX_JUMP_ITERATIONS");
    analyze_cmd->add_option("--models", models, "subset of poisson hawkes branching")
        ->envname("PFC_MODELS");
    analyze_cmd
        ->add_option("--seasonality", seasonality_override,
                     "override fitted seasonality: amp phase")
        ->expected(2)
        ->envname("PFC_SEASONALITY");

    auto* simulate_cmd = app.add_subcommand("simulate", "simulate factor dynamics from a scenario");
    simulate_cmd->add_option("--scenario", scenario_path, "scenario JSON file")
        ->envname("PFC_SCENARIO");

    auto* report_cmd = app.add_subcommand("report", "collate analysis outputs into one report");
    report_cmd->add_option("--maturities", maturities, "maturity day offsets")
        ->envname("PFC_MATURITIES");

    CLI11_PARSE(app, argc, argv);

    try {
        pfc::RunConfig cfg;
        if (!config_path.empty()) cfg = pfc::run_config_from_json(load_json_file(config_path));
        if (app.count("--output")) cfg.output_dir = output_dir;
        if (app.count("--seed")) cfg.seed = seed;
        if (app.count("--jobs")) cfg.jobs = jobs;
        if (curve_cmd->count("--input")) cfg.input = input;
        if (curve_cmd->count("--include-quarterly")) cfg.include_quarterly = include_quarterly;
        if (analyze_cmd->count("--curves-dir")) cfg.curves_dir = curves_dir;
        if (!maturities.empty()) cfg.maturities = maturities;
        if (analyze_cmd->count("--max-jump-iterations"))
            cfg.max_jump_iterations = max_jump_iterations;
        if (!models.empty()) {
            pfc::json j;
            j["models"] = models;
            auto parsed = pfc::run_config_from_json(j);
            cfg.models = parsed.models;
        }
        if (seasonality_override.size() == 2) {
            pfc::SeasonalityParams p;
            p.amp = seasonality_override[0];
            p.phase = seasonality_override[1];
            cfg.seasonality_override = p;
        }

        pfc::RunSummary summary;
        if (curve_cmd->parsed()) {
            if (cfg.input.empty()) throw pfc::ValidationError("curve requires --input or config");
            summary = pfc::cmd_curve(cfg);
            print_summary("curve", summary);
        } else if (analyze_cmd->parsed()) {
            summary = pfc::cmd_analyze(cfg);
            print_summary("analyze", summary);
        } else if (simulate_cmd->parsed()) {
            if (scenario_path.empty())
                throw pfc::ValidationError("simulate requires --scenario or config");
            auto scen = pfc::scenario_from_json(load_json_file(scenario_path));
            summary = pfc::cmd_simulate(cfg, scen);
            print_summary("simulate", summary);
        } else if (report_cmd->parsed()) {
            summary = pfc::cmd_report(cfg, std::cout);
        }
        return summary.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
