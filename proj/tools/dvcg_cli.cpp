#include <exception>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dvcg/harness.hpp"

// Exit codes: 0 success, 1 invariant failure, 2 configuration error.

namespace {

int cmd_exact(const std::string& config_path, const std::string& out_dir) {
    dvcg::harness::RunConfig config = dvcg::harness::load_config(config_path);
    if (!out_dir.empty()) config.out_dir = out_dir;
    dvcg::harness::ExactReport report = dvcg::harness::run_exact(config);
    dvcg::harness::write_exact_report(report, config.out_dir);
    std::cout << "instance " << report.instance
              << ": welfare_gap=" << report.desiderata.welfare_gap
              << " ir_min=" << report.desiderata.min_agent_utility
              << " truth_gain_max=" << report.desiderata.max_truthfulness_gain << "\n"
              << (report.ok ? "desiderata hold" : "DESIDERATA VIOLATED") << "\n";
    return report.ok ? 0 : 1;
}

int cmd_learn(const std::string& config_path, const std::string& out_dir, int jobs) {
    dvcg::harness::RunConfig config = dvcg::harness::load_config(config_path);
    if (!out_dir.empty()) config.out_dir = out_dir;
    dvcg::harness::LearnReport report = dvcg::harness::run_learn(config, jobs);
    dvcg::harness::write_learn_report(report, config.out_dir);
    std::cout << "wrote " << report.rows.size() << " rows to " << config.out_dir
              << "/report.csv\n";
    return 0;
}

int cmd_sweep(const std::vector<std::string>& reports, const std::string& out_dir) {
    std::vector<std::filesystem::path> paths(reports.begin(), reports.end());
    long rows = dvcg::harness::sweep_report(paths, out_dir);
    std::cout << "aggregated " << rows << " rows into " << out_dir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Offline learning and exact checking of dynamic pivot mechanisms"};
    app.require_subcommand(1);

    std::string config_path, out_dir, suite;
    int jobs = 1;
    uint64_t seed = 0;

    CLI::App* exact = app.add_subcommand("exact", "Exact mechanism plus desiderata checks");
    exact->add_option("--config", config_path, "run config (JSON)")->required();
    exact->add_option("--out", out_dir, "output directory");

    CLI::App* learn = app.add_subcommand("learn", "Offline learning sweep over (K, seed)");
    learn->add_option("--config", config_path, "run config (JSON)")->required();
    learn->add_option("--out", out_dir, "output directory");
    learn->add_option("--jobs", jobs, "parallel (K, seed) cells");

    std::vector<std::string> report_paths;
    CLI::App* sweep = app.add_subcommand("sweep-report", "Merge learn reports into tables");
    sweep->add_option("reports", report_paths, "report.csv files")->required();
    sweep->add_option("--out", out_dir, "output directory")->required();

    CLI::App* check = app.add_subcommand("check", "Run a named invariant suite");
    check->add_option("--suite", suite, "suite name")->required();
    check->add_option("--seed", seed, "master seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (exact->parsed()) return cmd_exact(config_path, out_dir);
        if (learn->parsed()) return cmd_learn(config_path, out_dir, jobs);
        if (sweep->parsed()) return cmd_sweep(report_paths, out_dir);
        if (check->parsed()) return dvcg::harness::run_check(suite, seed, std::cout);
    } catch (const dvcg::harness::ConfigError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
