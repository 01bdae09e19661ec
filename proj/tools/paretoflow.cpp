// ParetoFlow command line: dataset generation, model training, guided
// optimization, ablation sweeps, and plot-ready report exports.

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "paretoflow/harness.hpp"

namespace pf = paretoflow;

namespace {

struct CommonOpts {
    std::string config_path;
    std::string problem;
    std::string out_dir;
    std::string variant;
    std::uint64_t seed = 0;
    bool seed_set = false;
};

pf::RunConfig resolve_config(const CommonOpts& opts) {
    pf::RunConfig cfg;
    if (!opts.config_path.empty()) cfg = pf::RunConfig::load(opts.config_path);
    if (!opts.problem.empty()) cfg.problem = opts.problem;
    if (!opts.out_dir.empty()) cfg.out_dir = opts.out_dir;
    if (!opts.variant.empty()) cfg.sampler.variant = pf::variant_from_string(opts.variant);
    if (opts.seed_set) cfg.seed = opts.seed;
    return cfg;
}

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "Run configuration JSON file");
    cmd->add_option("--problem", opts.problem, "Override the benchmark problem name");
    cmd->add_option("--out-dir", opts.out_dir, "Override the output directory");
    cmd->add_option("--seed", opts.seed, "Override the global seed")
        ->each([&](const std::string&) { opts.seed_set = true; });
    cmd->add_option("--variant", opts.variant,
                    "Ablation variant: full, equal, first, no-local, no-neighbor, no-ps");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ParetoFlow: guided flow matching for offline multi-objective optimization"};
    app.require_subcommand(1);

    CommonOpts gen_opts, train_opts, opt_opts, abl_opts;
    std::string seeds_csv = "1,2,3";
    std::vector<std::string> report_dirs;

    CLI::App* gen = app.add_subcommand("gen-data", "Generate an offline dataset");
    add_common(gen, gen_opts);
    CLI::App* train = app.add_subcommand("train", "Train objective predictors and the flow model");
    add_common(train, train_opts);
    CLI::App* optimize = app.add_subcommand("optimize", "Run guided sampling and evaluate");
    add_common(optimize, opt_opts);
    CLI::App* ablate = app.add_subcommand("ablate", "Run all six ablation variants over seeds");
    add_common(ablate, abl_opts);
    ablate->add_option("--seeds", seeds_csv, "Comma-separated seed list");
    CLI::App* report = app.add_subcommand("report", "Emit plot-ready CSV exports for run dirs");
    report->add_option("dirs", report_dirs, "Run directories")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            pf::cmd_gen_data(resolve_config(gen_opts));
        } else if (train->parsed()) {
            pf::cmd_train(resolve_config(train_opts));
        } else if (optimize->parsed()) {
            pf::RunResult rr = pf::cmd_optimize(resolve_config(opt_opts));
            std::cout << rr.result["hypervolume"].dump() << "\n";
        } else if (ablate->parsed()) {
            std::vector<std::uint64_t> seeds;
            std::stringstream ss(seeds_csv);
            std::string cell;
            while (std::getline(ss, cell, ',')) seeds.push_back(std::stoull(cell));
            pf::Json table = pf::cmd_ablate(resolve_config(abl_opts), seeds);
            std::cout << table["rows"].dump(2) << "\n";
        } else if (report->parsed()) {
            bool any_failed = false;
            for (const std::string& dir : report_dirs) {
                try {
                    pf::cmd_report(dir);
                } catch (const std::exception& e) {
                    std::cerr << pf::Json{{"error", e.what()}, {"dir", dir}}.dump() << "\n";
                    any_failed = true;
                }
            }
            if (any_failed) return 1;
        }
    } catch (const std::exception& e) {
        std::cerr << pf::Json{{"error", e.what()}}.dump() << "\n";
        return 1;
    }
    return 0;
}
