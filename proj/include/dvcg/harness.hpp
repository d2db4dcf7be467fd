#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dvcg/bounds.hpp"
#include "dvcg/instance_io.hpp"
#include "dvcg/learner.hpp"
#include "dvcg/mechanism.hpp"

namespace dvcg::harness {

/// Configuration problems carry the offending field path; the CLI maps this
/// to exit code 2.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct InstanceSpec {
    enum class Source { File, Random, Builtin };
    Source source = Source::Builtin;
    std::string file;
    std::string builtin = "m2_n1";
    RandomInstanceSpec random;
};

struct DataSpec {
    enum class MuSource { Uniform, BehaviorUniform, Explicit };
    MuSource mu_source = MuSource::Uniform;
    std::vector<double> mu_explicit;  // flattened [h][s][a]
    std::vector<long> k_values{1000};
    std::vector<uint64_t> seeds{1};
    double noise = 0.0;
};

struct LearnerSpec {
    EvalMode zeta1 = EvalMode::Pes;
    EvalMode zeta2 = EvalMode::Opt;
    int iterations = 64;  // T

    // eta: "theory" uses the closed-form step (times eta_scale); "fixed" uses
    // the given value.
    std::string eta_mode = "theory";
    double eta = 0.0;
    double eta_scale = 1.0;

    // lambda: "fixed" takes `lambda`; "k_scaled" uses lambda_coeff * K^(2/3)
    // (the closed-form K-dependence with a practical constant); "theory"
    // derives lambda from the statistical width (logged in either case).
    std::string lambda_mode = "fixed";
    double lambda = 10.0;
    double lambda_coeff = 0.02;

    double delta = 0.05;
    OptimizerConfig optimizer;
    UnseenInit unseen_init = UnseenInit::BoxEdge;
};

struct EvaluationSpec {
    MisreportFamily family;  // used for IR / truthfulness probes
    bool ir = true;
    bool truthfulness = true;
};

struct RunConfig {
    int schema_version = 1;
    InstanceSpec instance;
    DataSpec data;
    LearnerSpec learner;
    EvaluationSpec evaluation;
    std::string out_dir = "out";
    uint64_t master_seed = 0;
};

RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::filesystem::path& path);

/// One (K, seed) cell of a learning sweep. Prices are compared against two
/// oracles: the pivot price of the policy the learner actually implements
/// (price_oracle, the general pivot-price equation at the learned policy) and
/// the truthful-optimum benchmark (price_benchmark).
struct LearnRow {
    std::string instance;
    long k = 0;
    uint64_t seed = 0;
    double subopt_welfare = 0.0;
    double subopt_seller = 0.0;
    std::vector<double> prices;
    std::vector<double> price_oracle;
    std::vector<double> price_benchmark;
    std::vector<double> subopt_agents;
    double ir_min = 0.0;
    double truth_gain_max = 0.0;
    bool ir_computed = false;
    bool truth_computed = false;
    double lambda_used = 0.0;
    double eta_used = 0.0;
    double lambda_theory = 0.0;
    double eps_s_theory = 0.0;
    bool nonconverged = false;
    double wall_seconds = 0.0;
    // truthful-run diagnostics, serialized into the JSON sidecar
    std::vector<double> g1;
    std::vector<double> g2;
    std::vector<double> welfare_f1_trace;
};

struct LearnReport {
    std::string instance;
    int num_agents = 0;
    EvalMode zeta1 = EvalMode::Pes;
    EvalMode zeta2 = EvalMode::Opt;
    // environment facts used by the bound comparison in the sidecar
    int horizon = 1;
    double r_max = 1.0;
    int num_actions_env = 1;
    int iterations = 1;
    double sqrt_shift_at_opt = 1.0;  // sqrt C of the optimal policy against mu
    std::vector<LearnRow> rows;      // ordered by (K, seed)
};

/// Run the full sweep described by the config. `jobs` > 1 evaluates (K, seed)
/// cells in parallel; the report is identical regardless.
LearnReport run_learn(const RunConfig& config, int jobs = 1);

std::string report_csv(const LearnReport& report);
std::string report_aggregates_json(const LearnReport& report);
void write_learn_report(const LearnReport& report, const std::filesystem::path& dir);

struct AggregateCell {
    double median = 0.0;
    double p25 = 0.0;
    double p75 = 0.0;
};

struct Aggregates {
    // metric -> K -> statistics over seeds
    std::map<std::string, std::map<long, AggregateCell>> table;
    // least-squares slope of log(median subopt_welfare) against log K;
    // unset when some median is not strictly positive (degenerate instance)
    std::optional<double> subopt_loglog_slope;
};

Aggregates aggregate(const LearnReport& report);

struct ExactReport {
    std::string instance;
    DesiderataReport desiderata;
    std::vector<double> prices;  // truthful-run prices
    double welfare = 0.0;        // achieved welfare of the truthful run
    bool ok = false;             // Prop.-1 tolerances respected
};

ExactReport run_exact(const RunConfig& config);
void write_exact_report(const ExactReport& report, const std::filesystem::path& dir);

/// Merge learn-report CSVs, recompute aggregates, and emit aggregated tables
/// plus per-metric plot files (x = K, y = median, one series per
/// (instance, zeta1, zeta2)). Returns the merged row count.
long sweep_report(const std::vector<std::filesystem::path>& report_csvs,
                  const std::filesystem::path& out_dir);

/// Named invariant suites behind `dvcg check`. Each prints one line per item
/// and returns true when every item passed.
bool check_suite_desiderata(int instances, uint64_t seed, std::ostream& out, int max_s = 3,
                            int max_a = 3, int max_h = 3, int max_n = 3);
bool check_suite_pessimism(int triples, long k, uint64_t seed, std::ostream& out,
                           double tolerance_scale, double min_pass_rate,
                           bool* induced_gap_ok = nullptr);
bool check_suite_regret(int sequences, const std::vector<int>& horizons_t, uint64_t seed,
                        std::ostream& out);
bool check_suite_shift(int instances, int draws, uint64_t seed, std::ostream& out);

/// Dispatch by suite name ("desiderata", "pessimism", "induced-gap",
/// "regret", "shift-soundness"). Returns the process exit code contract:
/// 0 pass, 1 failure, 2 unknown suite.
int run_check(const std::string& suite, uint64_t seed, std::ostream& out);

Instance build_instance(const InstanceSpec& spec);
DataDistribution build_distribution(const DataSpec& spec, const Instance& instance);

}  // namespace dvcg::harness
