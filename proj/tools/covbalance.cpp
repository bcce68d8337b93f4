// Command-line front end: run experiments, sweep parameters, compare
// strategies via win rates, and re-export recorded CSVs as plot data.
//
// Exit codes: 0 success, 2 configuration or validation error (message names
// the offending key), 1 runtime abort.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "covbalance/covbalance.hpp"

namespace {

namespace fs = std::filesystem;
using namespace covbalance;

fs::path resolve_out_dir(const std::string& flag_value) {
    if (!flag_value.empty()) return flag_value;
    if (const char* env = std::getenv("COVBALANCE_OUT_DIR"); env != nullptr && *env != '\0') {
        return env;
    }
    return "out";
}

std::string catalog_footer() {
    auto join = [](const std::vector<std::string>& names) {
        std::string out;
        for (const auto& n : names) {
            if (!out.empty()) out += " ";
            out += n;
        }
        return out;
    };
    return "strategies: " + join(strategy_catalog()) + "\nvariants: " + join(variant_catalog()) +
           "\nproblems: " + join(problem_catalog()) + "\naxes: " + join(axis_catalog()) +
           "\n\nWhen --out-dir is absent the COVBALANCE_OUT_DIR environment variable is used, "
           "then ./out.";
}

void print_run_line(const RunRecord& rec) {
    std::printf("%-12s seed %-6llu %s  objective %.6g", rec.label.c_str(),
                static_cast<unsigned long long>(rec.config.seed),
                rec.valid ? "ok     " : "ABORTED", rec.final_objective);
    if (std::isfinite(rec.final_dist)) std::printf("  dist %.6g", rec.final_dist);
    if (!rec.valid) std::printf("  (%s)", rec.abort_reason.c_str());
    std::printf("\n");
}

int finish_records(const std::vector<RunRecord>& records, const fs::path& out_dir,
                   const std::string& experiment) {
    for (const auto& rec : records) write_record_csv(rec, out_dir);
    const fs::path summary = out_dir / experiment / "summary.csv";
    write_summary_csv(records, summary);
    std::printf("summary: %s\n", summary.string().c_str());
    for (const auto& rec : records) {
        if (!rec.valid) {
            std::fprintf(stderr, "aborted run %s seed %llu: %s\n", rec.label.c_str(),
                         static_cast<unsigned long long>(rec.config.seed),
                         rec.abort_reason.c_str());
            return 1;
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Adaptive loss-weighting experiment harness"};
    app.require_subcommand(1);
    app.footer(catalog_footer());

    std::string config_path;
    std::string out_dir_flag;
    std::optional<std::uint64_t> seed_flag;
    std::size_t jobs = 1;

    auto* run_cmd = app.add_subcommand("run", "Execute one training run from a config file");
    run_cmd->add_option("--config", config_path, "Run configuration file")
        ->required()
        ->check(CLI::ExistingFile);
    run_cmd->add_option("--seed", seed_flag, "Override the seed from the config file");
    run_cmd->add_option("--out-dir", out_dir_flag, "Output directory");

    std::string axis;
    std::vector<std::string> values;
    auto* sweep_cmd = app.add_subcommand("sweep", "One run per value of a swept parameter");
    sweep_cmd->add_option("--config", config_path, "Run configuration file")
        ->required()
        ->check(CLI::ExistingFile);
    sweep_cmd->add_option("--axis", axis, "Parameter to sweep")->required();
    sweep_cmd->add_option("--values", values, "Comma-separated sweep values")
        ->required()
        ->delimiter(',');
    sweep_cmd->add_option("--jobs", jobs, "Max concurrent runs");
    sweep_cmd->add_option("--out-dir", out_dir_flag, "Output directory");

    std::vector<std::string> strategy_list;
    std::size_t seed_count = 32;
    auto* compare_cmd =
        app.add_subcommand("compare", "Pairwise win-rate table over a seed battery");
    compare_cmd->add_option("--config", config_path, "Run configuration file")
        ->required()
        ->check(CLI::ExistingFile);
    compare_cmd->add_option("--strategies", strategy_list, "Comma-separated scheme names")
        ->required()
        ->delimiter(',');
    compare_cmd->add_option("--seeds", seed_count, "Seed battery size");
    compare_cmd->add_option("--jobs", jobs, "Max concurrent runs");
    compare_cmd->add_option("--out-dir", out_dir_flag, "Output directory");

    std::vector<std::string> plot_inputs;
    auto* export_cmd =
        app.add_subcommand("export-plot-data", "Re-emit recorded CSV files as plot data");
    export_cmd->add_option("inputs", plot_inputs, "Previously emitted CSV files")
        ->required()
        ->check(CLI::ExistingFile);
    export_cmd->add_option("--out-dir", out_dir_flag, "Output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    const fs::path out_dir = resolve_out_dir(out_dir_flag);
    try {
        if (run_cmd->parsed()) {
            RunConfig cfg = parse_config_file(config_path);
            if (seed_flag) cfg.seed = *seed_flag;
            RunRecord rec = run_experiment(cfg);
            print_run_line(rec);
            std::printf("trajectory: %s\n", record_csv_path(out_dir, rec).string().c_str());
            return finish_records({rec}, out_dir, cfg.experiment);
        }
        if (sweep_cmd->parsed()) {
            RunConfig cfg = parse_config_file(config_path);
            if (seed_flag) cfg.seed = *seed_flag;
            std::vector<RunRecord> records = sweep(cfg, axis, values, jobs);
            for (std::size_t i = 0; i < records.size(); ++i) {
                std::printf("%-10s ", values[i].c_str());
                print_run_line(records[i]);
            }
            return finish_records(records, out_dir, cfg.experiment);
        }
        if (compare_cmd->parsed()) {
            RunConfig cfg = parse_config_file(config_path);
            CompareResult result = compare_strategies(cfg, strategy_list, seed_count, jobs);
            std::printf("win rate of row against column, %zu seeds\n", seed_count);
            std::printf("%-12s", "");
            for (const auto& name : result.strategies) std::printf(" %11s", name.c_str());
            std::printf("\n");
            for (std::size_t i = 0; i < result.strategies.size(); ++i) {
                std::printf("%-12s", result.strategies[i].c_str());
                for (std::size_t j = 0; j < result.strategies.size(); ++j) {
                    std::printf(" %11.3f", result.win_rates[i][j]);
                }
                std::printf("\n");
            }
            return finish_records(result.records, out_dir, cfg.experiment);
        }
        if (export_cmd->parsed()) {
            std::vector<fs::path> inputs(plot_inputs.begin(), plot_inputs.end());
            const fs::path out_path = out_dir / "plot_data.csv";
            export_plot_data(inputs, out_path);
            std::printf("plot data: %s\n", out_path.string().c_str());
            return 0;
        }
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
