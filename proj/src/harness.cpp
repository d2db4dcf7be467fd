#include "dvcg/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "dvcg/dp.hpp"
#include "dvcg/rng.hpp"

namespace dvcg::harness {

using nlohmann::json;

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string zeta_name(EvalMode m) { return m == EvalMode::Opt ? "OPT" : "PES"; }

EvalMode parse_zeta(const std::string& s, const std::string& path) {
    if (s == "OPT") return EvalMode::Opt;
    if (s == "PES") return EvalMode::Pes;
    throw ConfigError("config error at " + path + ": expected \"OPT\" or \"PES\", got \"" + s +
                      "\"");
}

const json& require(const json& j, const char* key, const std::string& path) {
    auto it = j.find(key);
    if (it == j.end())
        throw ConfigError("config error: missing required field \"" + path + "." + key + "\"");
    return *it;
}

template <typename T>
T require_as(const json& j, const char* key, const std::string& path) {
    try {
        return require(j, key, path).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError("config error at " + path + "." + key + ": " + e.what());
    }
}

template <typename T>
T value_or(const json& j, const char* key, const std::string& path, T fallback) {
    auto it = j.find(key);
    if (it == j.end()) return fallback;
    try {
        return it->get<T>();
    } catch (const json::exception& e) {
        throw ConfigError("config error at " + path + "." + key + ": " + e.what());
    }
}

MisreportFamily parse_family(const json& j, const std::string& path) {
    MisreportFamily fam;
    std::string kind = value_or<std::string>(j, "kind", path, "scale");
    if (kind == "grid") {
        fam.kind = MisreportFamily::Kind::Grid;
        fam.grid_levels = value_or<int>(j, "levels", path, 3);
        fam.max_profiles = value_or<long>(j, "max_profiles", path, 19683);
    } else if (kind == "cloud") {
        fam.kind = MisreportFamily::Kind::Cloud;
        fam.cloud_count = value_or<int>(j, "count", path, 100);
        fam.cloud_magnitude = value_or<double>(j, "magnitude", path, 0.25);
        fam.cloud_seed = value_or<uint64_t>(j, "seed", path, 0);
    } else if (kind == "scale") {
        fam.kind = MisreportFamily::Kind::Scale;
        fam.scale_levels =
            value_or<std::vector<double>>(j, "levels", path, std::vector<double>{0.0, 0.5});
    } else {
        throw ConfigError("config error at " + path + ".kind: unknown misreport kind \"" + kind +
                          "\"");
    }
    return fam;
}

}  // namespace

RunConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config error: invalid JSON: ") + e.what());
    }
    RunConfig cfg;
    cfg.schema_version = require_as<int>(j, "schema_version", "config");
    if (cfg.schema_version != 1)
        throw ConfigError("config error at config.schema_version: unsupported version");

    const json& inst = require(j, "instance", "config");
    if (inst.contains("file")) {
        cfg.instance.source = InstanceSpec::Source::File;
        cfg.instance.file = require_as<std::string>(inst, "file", "config.instance");
    } else if (inst.contains("random")) {
        cfg.instance.source = InstanceSpec::Source::Random;
        const json& r = inst.at("random");
        cfg.instance.random.num_states = require_as<int>(r, "S", "config.instance.random");
        cfg.instance.random.num_actions = require_as<int>(r, "A", "config.instance.random");
        cfg.instance.random.horizon = require_as<int>(r, "H", "config.instance.random");
        cfg.instance.random.num_agents = require_as<int>(r, "n", "config.instance.random");
        cfg.instance.random.r_max = value_or<double>(r, "r_max", "config.instance.random", 0.0);
        cfg.instance.random.seed = value_or<uint64_t>(r, "seed", "config.instance.random", 0);
    } else if (inst.contains("builtin")) {
        cfg.instance.source = InstanceSpec::Source::Builtin;
        cfg.instance.builtin = require_as<std::string>(inst, "builtin", "config.instance");
    } else {
        throw ConfigError(
            "config error at config.instance: needs one of \"file\", \"random\", \"builtin\"");
    }

    if (j.contains("data")) {
        const json& d = j.at("data");
        if (d.contains("mu")) {
            const json& mu = d.at("mu");
            if (mu.is_string() && mu.get<std::string>() == "uniform") {
                cfg.data.mu_source = DataSpec::MuSource::Uniform;
            } else if (mu.is_object() && mu.contains("behavior")) {
                cfg.data.mu_source = DataSpec::MuSource::BehaviorUniform;
            } else if (mu.is_object() && mu.contains("explicit")) {
                cfg.data.mu_source = DataSpec::MuSource::Explicit;
                cfg.data.mu_explicit = mu.at("explicit").get<std::vector<double>>();
            } else {
                throw ConfigError("config error at config.data.mu: unrecognized source");
            }
        }
        cfg.data.k_values = value_or<std::vector<long>>(d, "K", "config.data", {1000});
        cfg.data.seeds = value_or<std::vector<uint64_t>>(d, "seeds", "config.data", {1});
        cfg.data.noise = value_or<double>(d, "noise", "config.data", 0.0);
    }
    for (long k : cfg.data.k_values)
        if (k < 1) throw ConfigError("config error at config.data.K: values must be >= 1");
    {
        auto sorted = cfg.data.seeds;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
            throw ConfigError("config error at config.data.seeds: seeds must be distinct");
    }

    if (j.contains("learner")) {
        const json& l = j.at("learner");
        cfg.learner.zeta1 = parse_zeta(
            value_or<std::string>(l, "zeta1", "config.learner", "PES"), "config.learner.zeta1");
        cfg.learner.zeta2 = parse_zeta(
            value_or<std::string>(l, "zeta2", "config.learner", "OPT"), "config.learner.zeta2");
        cfg.learner.iterations = value_or<int>(l, "T", "config.learner", 64);
        cfg.learner.eta_mode = value_or<std::string>(l, "eta_mode", "config.learner", "theory");
        cfg.learner.eta = value_or<double>(l, "eta", "config.learner", 0.0);
        cfg.learner.eta_scale = value_or<double>(l, "eta_scale", "config.learner", 1.0);
        cfg.learner.lambda_mode =
            value_or<std::string>(l, "lambda_mode", "config.learner", "fixed");
        cfg.learner.lambda = value_or<double>(l, "lambda", "config.learner", 10.0);
        cfg.learner.lambda_coeff = value_or<double>(l, "lambda_coeff", "config.learner", 0.02);
        cfg.learner.delta = value_or<double>(l, "delta", "config.learner", 0.05);
        if (l.contains("eval")) {
            const json& e = l.at("eval");
            cfg.learner.optimizer.max_iterations =
                value_or<int>(e, "max_iterations", "config.learner.eval", 5000);
            cfg.learner.optimizer.step_size =
                value_or<double>(e, "step_size", "config.learner.eval", 0.0);
            cfg.learner.optimizer.tolerance =
                value_or<double>(e, "tolerance", "config.learner.eval", 1e-9);
            std::string init =
                value_or<std::string>(e, "unseen_init", "config.learner.eval", "box_edge");
            if (init == "box_edge")
                cfg.learner.unseen_init = UnseenInit::BoxEdge;
            else if (init == "zero")
                cfg.learner.unseen_init = UnseenInit::Zero;
            else
                throw ConfigError("config error at config.learner.eval.unseen_init: "
                                  "expected \"box_edge\" or \"zero\"");
        }
        if (cfg.learner.iterations < 1)
            throw ConfigError("config error at config.learner.T: must be >= 1");
        if (cfg.learner.eta_mode != "theory" && cfg.learner.eta_mode != "fixed")
            throw ConfigError("config error at config.learner.eta_mode: unknown mode");
        if (cfg.learner.lambda_mode != "fixed" && cfg.learner.lambda_mode != "k_scaled" &&
            cfg.learner.lambda_mode != "theory")
            throw ConfigError("config error at config.learner.lambda_mode: unknown mode");
        if (cfg.learner.lambda_mode == "fixed" && cfg.learner.lambda <= 0.0)
            throw ConfigError("config error at config.learner.lambda: must be positive");
        if (cfg.learner.lambda_mode == "k_scaled" && cfg.learner.lambda_coeff <= 0.0)
            throw ConfigError("config error at config.learner.lambda_coeff: must be positive");
        if (!(cfg.learner.delta > 0.0 && cfg.learner.delta < 1.0))
            throw ConfigError("config error at config.learner.delta: must lie in (0, 1)");
    }

    if (j.contains("evaluation")) {
        const json& e = j.at("evaluation");
        if (e.contains("misreports"))
            cfg.evaluation.family =
                parse_family(e.at("misreports"), "config.evaluation.misreports");
        cfg.evaluation.ir = value_or<bool>(e, "ir", "config.evaluation", true);
        cfg.evaluation.truthfulness =
            value_or<bool>(e, "truthfulness", "config.evaluation", true);
    }
    if (j.contains("output"))
        cfg.out_dir = value_or<std::string>(j.at("output"), "dir", "config.output", "out");
    cfg.master_seed = value_or<uint64_t>(j, "master_seed", "config", 0);
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config error: cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

Instance build_instance(const InstanceSpec& spec) {
    switch (spec.source) {
        case InstanceSpec::Source::File:
            try {
                return load_instance(spec.file);
            } catch (const std::exception& e) {
                throw ConfigError(std::string("config error at config.instance.file: ") +
                                  e.what());
            }
        case InstanceSpec::Source::Random:
            try {
                return random_instance(spec.random);
            } catch (const std::exception& e) {
                throw ConfigError(std::string("config error at config.instance.random: ") +
                                  e.what());
            }
        case InstanceSpec::Source::Builtin:
            if (spec.builtin == "m2_n1") return make_m2_n1();
            if (spec.builtin == "m2_n2") return make_m2_n2();
            throw ConfigError("config error at config.instance.builtin: unknown instance \"" +
                              spec.builtin + "\"");
    }
    throw ConfigError("config error: invalid instance source");
}

DataDistribution build_distribution(const DataSpec& spec, const Instance& instance) {
    const MdpShape shape = instance.mdp.shape();
    switch (spec.mu_source) {
        case DataSpec::MuSource::Uniform:
            return DataDistribution::uniform(shape);
        case DataSpec::MuSource::BehaviorUniform:
            return DataDistribution(visitation(instance.mdp, StagePolicy::uniform(shape)).table());
        case DataSpec::MuSource::Explicit: {
            Grid3 mu(shape.horizon, shape.num_states, shape.num_actions, 0.0);
            if (spec.mu_explicit.size() != mu.data().size())
                throw ConfigError("config error at config.data.mu.explicit: wrong length");
            mu.data() = spec.mu_explicit;
            return DataDistribution(std::move(mu));
        }
    }
    throw ConfigError("config error: invalid mu source");
}

namespace {

struct ResolvedLearner {
    VcgLearnConfig cfg;
    double lambda = 0.0;
    double eta = 0.0;
    double lambda_theory = 0.0;
    double eps_s_theory = 0.0;
};

ResolvedLearner resolve_learner(const LearnerSpec& spec, const Instance& instance, long k) {
    const MdpShape shape = instance.mdp.shape();
    const double r_max = instance.actual.r_max();
    const int T = spec.iterations;

    double eta_theory =
        compute_lambda_eta(r_max, shape.horizon, shape.num_actions, T, 1.0, 0.0).eta;
    double eta = spec.eta_mode == "fixed" ? spec.eta : eta_theory * spec.eta_scale;

    CoveringLogBounds cov_f =
        covering_log_bounds(shape.num_states, shape.num_actions, shape.horizon, T, eta, r_max,
                            f_covering_radius(k, shape.horizon, r_max));
    CoveringLogBounds cov_pi =
        covering_log_bounds(shape.num_states, shape.num_actions, shape.horizon, T, eta, r_max,
                            pi_covering_radius(k, shape.horizon, r_max));
    double eps = epsilon_s(k, spec.delta, instance.actual.num_agents(), shape.horizon, r_max,
                           cov_f.log_cov_f, cov_pi.log_cov_pi);
    double lambda_theory =
        compute_lambda_eta(r_max, shape.horizon, shape.num_actions, T, eps, 0.0).lambda;

    double lambda = spec.lambda;
    if (spec.lambda_mode == "k_scaled")
        lambda = spec.lambda_coeff * std::pow(static_cast<double>(k), 2.0 / 3.0);
    else if (spec.lambda_mode == "theory")
        lambda = lambda_theory;

    ResolvedLearner out;
    out.lambda = lambda;
    out.eta = eta;
    out.lambda_theory = lambda_theory;
    out.eps_s_theory = eps;
    EvalConfig eval;
    eval.lambda = lambda;
    eval.optimizer = spec.optimizer;
    eval.unseen_init = spec.unseen_init;
    out.cfg.zeta1 = spec.zeta1;
    out.cfg.zeta2 = spec.zeta2;
    out.cfg.spi.iterations = T;
    out.cfg.spi.eta = eta;
    out.cfg.spi.opt_eval = eval;
    out.cfg.spi.opt_eval.mode = EvalMode::Opt;
    out.cfg.spi.pes_eval = eval;
    out.cfg.spi.pes_eval.mode = EvalMode::Pes;
    return out;
}

RewardProfile as_reported(const RewardProfile& actual) {
    std::vector<Grid3> gs;
    gs.reserve(static_cast<size_t>(actual.num_agents()));
    for (int i = 0; i < actual.num_agents(); ++i) gs.push_back(actual.agent(i));
    return RewardProfile(actual.r_max(), actual.seller(), std::move(gs), RewardRole::Reported);
}

// Master-seed split: listed seeds pass through unchanged when the master is 0,
// otherwise each sub-stream derives from (master, listed seed). Changing the
// K list never perturbs instance or dataset randomness either way.
uint64_t dataset_seed(uint64_t master, uint64_t listed) {
    if (master == 0) return listed;
    return Rng::derive(master, {0x64617461ULL, listed}).next_u64();
}

LearnRow run_cell(const RunConfig& config, const Instance& instance, const DataDistribution& mu,
                  long k, uint64_t seed) {
    const auto t_start = std::chrono::steady_clock::now();
    const TabularMdp& mdp = instance.mdp;
    const RewardProfile& actual = instance.actual;
    const int n = actual.num_agents();

    ResolvedLearner rl = resolve_learner(config.learner, instance, k);
    RewardProfile truthful_reported = as_reported(actual);

    const uint64_t stream_seed = dataset_seed(config.master_seed, seed);
    auto learn_on = [&](const RewardProfile& reported) {
        OfflineDataset data =
            sample_dataset(mdp, reported, mu, k, stream_seed, config.data.noise);
        return offline_vcg_learn(data, reported, rl.cfg);
    };

    LearnResult truthful = learn_on(truthful_reported);
    PolicyChoice policy = truthful.policy;

    LearnRow row;
    row.instance = instance.name;
    row.k = k;
    row.seed = seed;
    row.lambda_used = rl.lambda;
    row.eta_used = rl.eta;
    row.lambda_theory = rl.lambda_theory;
    row.eps_s_theory = rl.eps_s_theory;
    row.nonconverged = truthful.diagnostics.any_nonconverged;
    row.g1 = truthful.diagnostics.g1;
    row.g2 = truthful.diagnostics.g2;
    row.welfare_f1_trace = truthful.diagnostics.welfare_f1_trace;

    row.subopt_welfare = subopt_welfare(mdp, actual, policy);
    MechanismOutcome outcome{policy, truthful.prices, Provenance::Learned};
    row.subopt_seller = subopt_seller(mdp, actual, outcome);
    row.prices = truthful.prices;
    row.price_benchmark = benchmark_prices(mdp, actual);
    row.price_oracle.resize(static_cast<size_t>(n));
    row.subopt_agents.resize(static_cast<size_t>(n));
    std::vector<double> truthful_utility(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        row.price_oracle[static_cast<size_t>(i)] = vcg_price(mdp, truthful_reported, policy, i);
        row.subopt_agents[static_cast<size_t>(i)] = subopt_agent(mdp, actual, i, outcome);
        truthful_utility[static_cast<size_t>(i)] =
            agent_utility(mdp, actual.agent(i), policy, truthful.prices[static_cast<size_t>(i)]);
    }

    row.ir_computed = config.evaluation.ir;
    row.truth_computed = config.evaluation.truthfulness;
    if (row.ir_computed) {
        row.ir_min = truthful_utility[0];
        for (int i = 1; i < n; ++i)
            row.ir_min = std::min(row.ir_min, truthful_utility[static_cast<size_t>(i)]);
    }
    if (row.truth_computed) row.truth_gain_max = -std::numeric_limits<double>::infinity();

    if (row.ir_computed || row.truth_computed) {
        long probes = 0;
        for (int j = 0; j < n; ++j) {
            auto misreports = enumerate_misreports(config.evaluation.family, actual.agent(j));
            for (auto& rj : misreports) {
                RewardProfile deviated =
                    truthful_reported.with_agent(j, std::move(rj), RewardRole::Reported);
                LearnResult dev = learn_on(deviated);
                row.nonconverged = row.nonconverged || dev.diagnostics.any_nonconverged;
                PolicyChoice dev_policy = dev.policy;
                ++probes;
                if (row.truth_computed) {
                    double u_dev = agent_utility(mdp, actual.agent(j), dev_policy,
                                                 dev.prices[static_cast<size_t>(j)]);
                    row.truth_gain_max = std::max(row.truth_gain_max,
                                                  u_dev - truthful_utility[static_cast<size_t>(j)]);
                }
                if (row.ir_computed) {
                    for (int i = 0; i < n; ++i) {
                        if (i == j) continue;
                        double u_i = agent_utility(mdp, actual.agent(i), dev_policy,
                                                   dev.prices[static_cast<size_t>(i)]);
                        row.ir_min = std::min(row.ir_min, u_i);
                    }
                }
            }
        }
        if (row.truth_computed && probes == 0) row.truth_gain_max = 0.0;
    }

    row.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return row;
}

}  // namespace

LearnReport run_learn(const RunConfig& config, int jobs) {
    InstanceSpec inst_spec = config.instance;
    if (config.master_seed != 0 && inst_spec.source == InstanceSpec::Source::Random)
        inst_spec.random.seed =
            Rng::derive(config.master_seed, {0x696e7374ULL, inst_spec.random.seed}).next_u64();
    Instance instance = build_instance(inst_spec);
    DataDistribution mu = build_distribution(config.data, instance);

    std::vector<std::pair<long, uint64_t>> cells;
    for (long k : config.data.k_values)
        for (uint64_t seed : config.data.seeds) cells.emplace_back(k, seed);

    LearnReport report;
    report.instance = instance.name;
    report.num_agents = instance.actual.num_agents();
    report.zeta1 = config.learner.zeta1;
    report.zeta2 = config.learner.zeta2;
    report.horizon = instance.mdp.horizon();
    report.r_max = instance.actual.r_max();
    report.num_actions_env = instance.mdp.num_actions();
    report.iterations = config.learner.iterations;
    {
        VisitationMeasure d_star =
            visitation(instance.mdp, exact_optimal(instance.mdp, instance.actual.total()).policy);
        VisitationMeasure mu_measure(mu.table());
        report.sqrt_shift_at_opt = std::sqrt(shift_coefficient(d_star, mu_measure));
    }
    report.rows.resize(cells.size());

    jobs = std::max(1, jobs);
    if (jobs == 1) {
        for (size_t c = 0; c < cells.size(); ++c)
            report.rows[c] = run_cell(config, instance, mu, cells[c].first, cells[c].second);
    } else {
        std::atomic<size_t> next{0};
        std::vector<std::thread> workers;
        workers.reserve(static_cast<size_t>(jobs));
        for (int w = 0; w < jobs; ++w)
            workers.emplace_back([&] {
                for (;;) {
                    size_t c = next.fetch_add(1);
                    if (c >= cells.size()) return;
                    report.rows[c] =
                        run_cell(config, instance, mu, cells[c].first, cells[c].second);
                }
            });
        for (auto& w : workers) w.join();
    }
    return report;
}

std::string report_csv(const LearnReport& report) {
    std::ostringstream out;
    out << "instance,zeta1,zeta2,K,seed,subopt_welfare,subopt_seller,ir_min,truth_gain_max,"
           "nonconverged,lambda,eta,lambda_theory,eps_s_theory";
    for (int i = 0; i < report.num_agents; ++i)
        out << ",price_" << i << ",price_oracle_" << i << ",price_benchmark_" << i
            << ",subopt_agent_" << i;
    out << "\n";
    for (const LearnRow& row : report.rows) {
        out << row.instance << ',' << zeta_name(report.zeta1) << ',' << zeta_name(report.zeta2)
            << ',' << row.k << ',' << row.seed << ',' << fmt(row.subopt_welfare) << ','
            << fmt(row.subopt_seller) << ',' << (row.ir_computed ? fmt(row.ir_min) : "NA") << ','
            << (row.truth_computed ? fmt(row.truth_gain_max) : "NA") << ','
            << (row.nonconverged ? 1 : 0) << ',' << fmt(row.lambda_used) << ','
            << fmt(row.eta_used) << ',' << fmt(row.lambda_theory) << ','
            << fmt(row.eps_s_theory);
        for (int i = 0; i < report.num_agents; ++i) {
            size_t idx = static_cast<size_t>(i);
            out << ',' << fmt(row.prices[idx]) << ',' << fmt(row.price_oracle[idx]) << ','
                << fmt(row.price_benchmark[idx]) << ',' << fmt(row.subopt_agents[idx]);
        }
        out << "\n";
    }
    return out.str();
}

namespace {

AggregateCell cell_stats(std::vector<double> xs) {
    AggregateCell c;
    std::sort(xs.begin(), xs.end());
    const size_t m = xs.size();
    auto quantile = [&](double q) {
        double pos = q * static_cast<double>(m - 1);
        size_t lo = static_cast<size_t>(pos);
        size_t hi = std::min(lo + 1, m - 1);
        double w = pos - static_cast<double>(lo);
        return xs[lo] * (1.0 - w) + xs[hi] * w;
    };
    c.median = (m % 2 == 1) ? xs[m / 2] : 0.5 * (xs[m / 2 - 1] + xs[m / 2]);
    c.p25 = quantile(0.25);
    c.p75 = quantile(0.75);
    return c;
}

std::optional<double> loglog_slope(const std::map<long, AggregateCell>& cells) {
    if (cells.size() < 2) return std::nullopt;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& [k, cell] : cells) {
        if (cell.median <= 1e-12) return std::nullopt;  // degenerate: exact zeros
        double x = std::log(static_cast<double>(k)), y = std::log(cell.median);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    double m = static_cast<double>(cells.size());
    return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

}  // namespace

Aggregates aggregate(const LearnReport& report) {
    std::map<std::string, std::map<long, std::vector<double>>> samples;
    for (const LearnRow& row : report.rows) {
        auto put = [&](const std::string& name, double v) { samples[name][row.k].push_back(v); };
        put("subopt_welfare", row.subopt_welfare);
        put("subopt_seller", row.subopt_seller);
        if (row.ir_computed) put("ir_min", row.ir_min);
        if (row.truth_computed) put("truth_gain_max", row.truth_gain_max);
        double err_oracle = 0.0, err_bench = 0.0, subopt_agent_max = 0.0;
        for (size_t i = 0; i < row.prices.size(); ++i) {
            err_oracle = std::max(err_oracle, std::fabs(row.prices[i] - row.price_oracle[i]));
            err_bench = std::max(err_bench, std::fabs(row.prices[i] - row.price_benchmark[i]));
            subopt_agent_max = std::max(subopt_agent_max, row.subopt_agents[i]);
        }
        put("price_abs_err_oracle", err_oracle);
        put("price_abs_err_benchmark", err_bench);
        put("subopt_agent_max", subopt_agent_max);
    }
    Aggregates agg;
    for (auto& [metric, by_k] : samples)
        for (auto& [k, xs] : by_k) agg.table[metric][k] = cell_stats(std::move(xs));
    auto it = agg.table.find("subopt_welfare");
    if (it != agg.table.end()) agg.subopt_loglog_slope = loglog_slope(it->second);
    return agg;
}

std::string report_aggregates_json(const LearnReport& report) {
    Aggregates agg = aggregate(report);
    json j;
    j["instance"] = report.instance;
    j["zeta1"] = zeta_name(report.zeta1);
    j["zeta2"] = zeta_name(report.zeta2);
    json table = json::object();
    for (const auto& [metric, by_k] : agg.table) {
        json rows = json::array();
        for (const auto& [k, cell] : by_k)
            rows.push_back(
                {{"K", k}, {"median", cell.median}, {"p25", cell.p25}, {"p75", cell.p75}});
        table[metric] = std::move(rows);
    }
    j["aggregates"] = std::move(table);
    if (agg.subopt_loglog_slope)
        j["subopt_loglog_slope"] = *agg.subopt_loglog_slope;
    else
        j["subopt_loglog_slope"] = nullptr;

    // Theory-mode welfare bound per K against the measured medians. The
    // tabular shift coefficient is a plain density-ratio supremum, so the
    // averaged multiplier reduces to the optimum policy's ratio against mu.
    if (!report.rows.empty() && agg.table.count("subopt_welfare") != 0) {
        json cmp = json::array();
        std::map<long, double> eps_by_k;
        for (const LearnRow& row : report.rows) eps_by_k[row.k] = row.eps_s_theory;
        for (const auto& [k, cell] : agg.table.at("subopt_welfare")) {
            const LearnRow& sample = report.rows.front();
            ErrorBudget budget;
            budget.eps_s = eps_by_k[k];
            budget.horizon = report.horizon;
            budget.r_max = report.r_max;
            budget.num_actions = report.num_actions_env;
            budget.iterations = report.iterations;
            budget.num_agents = report.num_agents;
            budget.sqrt_shift_terms["avg_sqrt_c_iter_vs_opt"] = report.sqrt_shift_at_opt;
            double bound = theorem_bound(budget, BoundKind::Welfare,
                                         report.zeta1 == EvalMode::Opt ? Zeta::Opt : Zeta::Pes,
                                         report.zeta2 == EvalMode::Opt ? Zeta::Opt : Zeta::Pes);
            cmp.push_back({{"K", k},
                           {"metric", "subopt_welfare"},
                           {"median", cell.median},
                           {"theory_bound", bound},
                           {"violated", cell.median > bound}});
            (void)sample;
        }
        j["bound_comparison"] = std::move(cmp);
    }

    json rows_out = json::array();
    for (const LearnRow& row : report.rows)
        rows_out.push_back({{"K", row.k},
                            {"seed", row.seed},
                            {"wall_seconds", row.wall_seconds},
                            {"g1", row.g1},
                            {"g2", row.g2},
                            {"welfare_f1_trace", row.welfare_f1_trace}});
    j["per_row_diagnostics"] = std::move(rows_out);
    return j.dump(1) + "\n";
}

void write_learn_report(const LearnReport& report, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "report.csv", std::ios::binary);
        if (!out) throw std::runtime_error("write_learn_report: cannot open report.csv");
        out << report_csv(report);
    }
    {
        std::ofstream out(dir / "report.json", std::ios::binary);
        if (!out) throw std::runtime_error("write_learn_report: cannot open report.json");
        out << report_aggregates_json(report);
    }
}

ExactReport run_exact(const RunConfig& config) {
    Instance instance = build_instance(config.instance);
    const TabularMdp& mdp = instance.mdp;
    ExactReport report;
    report.instance = instance.name;
    report.desiderata =
        check_desiderata(mdp, instance.actual, config.evaluation.family,
                         [&](const RewardProfile& reported) { return exact_vcg(mdp, reported); });
    MechanismOutcome truthful = exact_vcg(mdp, as_reported(instance.actual));
    report.prices = truthful.prices;
    report.welfare = value_of(mdp, instance.actual.total(), truthful.policy);
    report.ok = report.desiderata.welfare_gap <= 1e-9 &&
                report.desiderata.min_agent_utility >= -1e-9 &&
                report.desiderata.max_truthfulness_gain <= 1e-9;
    return report;
}

void write_exact_report(const ExactReport& report, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    json j;
    j["instance"] = report.instance;
    j["welfare"] = report.welfare;
    j["welfare_gap"] = report.desiderata.welfare_gap;
    j["ir_min"] = report.desiderata.min_agent_utility;
    j["truth_gain_max"] = report.desiderata.max_truthfulness_gain;
    j["reported_value_minus_price_min"] = report.desiderata.min_reported_value_minus_price;
    j["family_note"] = report.desiderata.family_note;
    j["ok"] = report.ok;
    json agents = json::array();
    for (const auto& row : report.desiderata.per_agent)
        agents.push_back({{"agent", row.agent},
                          {"truthful_utility", row.truthful_utility},
                          {"truthful_price", row.truthful_price},
                          {"min_utility", row.min_utility},
                          {"max_gain", row.max_gain},
                          {"misreports_checked", row.misreports_checked}});
    j["per_agent"] = std::move(agents);
    std::ofstream out(dir / "exact_report.json", std::ios::binary);
    if (!out) throw std::runtime_error("write_exact_report: cannot open exact_report.json");
    out << j.dump(1) << "\n";
}

namespace {

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

CsvTable parse_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("sweep_report: cannot open " + path.string());
    CsvTable t;
    std::string line;
    auto split = [](const std::string& s) {
        std::vector<std::string> out;
        std::string cur;
        for (char c : s) {
            if (c == ',') {
                out.push_back(cur);
                cur.clear();
            } else {
                cur += c;
            }
        }
        out.push_back(cur);
        return out;
    };
    if (std::getline(in, line)) t.header = split(line);
    while (std::getline(in, line))
        if (!line.empty()) t.rows.push_back(split(line));
    return t;
}

}  // namespace

long sweep_report(const std::vector<std::filesystem::path>& report_csvs,
                  const std::filesystem::path& out_dir) {
    if (report_csvs.empty()) throw std::runtime_error("sweep_report: no input reports");
    std::filesystem::create_directories(out_dir);

    // series -> metric -> K -> samples. Columns are matched by name per file,
    // so reports may differ in agent count; the key columns must exist.
    std::map<std::string, std::map<std::string, std::map<long, std::vector<double>>>> samples;
    long total_rows = 0;

    for (const auto& path : report_csvs) {
        CsvTable t = parse_csv(path);
        const auto& header = t.header;
        auto col = [&](const std::string& name) {
            auto it = std::find(header.begin(), header.end(), name);
            if (it == header.end())
                throw std::runtime_error("sweep_report: incompatible schema in " +
                                         path.string() + ": missing column " + name);
            return static_cast<size_t>(it - header.begin());
        };
        size_t c_inst = col("instance"), c_z1 = col("zeta1"), c_z2 = col("zeta2"),
               c_k = col("K");
        (void)col("seed");
        for (const auto& row : t.rows) {
            if (row.size() != header.size())
                throw std::runtime_error("sweep_report: ragged row in " + path.string());
            ++total_rows;
            std::string series = row[c_inst] + "/" + row[c_z1] + "-" + row[c_z2];
            long k = std::stol(row[c_k]);
            double max_err_oracle = 0.0, max_err_bench = 0.0;
            bool any_price = false;
            for (size_t c = 0; c < header.size(); ++c) {
                const std::string& name = header[c];
                if (name == "instance" || name == "zeta1" || name == "zeta2" || name == "K" ||
                    name == "seed" || name == "nonconverged")
                    continue;
                if (row[c] == "NA") continue;
                if (name.rfind("price_oracle_", 0) == 0 ||
                    name.rfind("price_benchmark_", 0) == 0)
                    continue;
                double v = std::stod(row[c]);
                if (name.rfind("price_", 0) == 0) {
                    std::string idx = name.substr(6);
                    double oracle = std::stod(row[col("price_oracle_" + idx)]);
                    double bench = std::stod(row[col("price_benchmark_" + idx)]);
                    max_err_oracle = std::max(max_err_oracle, std::fabs(v - oracle));
                    max_err_bench = std::max(max_err_bench, std::fabs(v - bench));
                    any_price = true;
                    continue;
                }
                samples[series][name][k].push_back(v);
            }
            if (any_price) {
                samples[series]["price_abs_err_oracle"][k].push_back(max_err_oracle);
                samples[series]["price_abs_err_benchmark"][k].push_back(max_err_bench);
            }
        }
    }

    std::ofstream agg_out(out_dir / "aggregates.csv", std::ios::binary);
    agg_out << "series,metric,K,median,p25,p75\n";
    json slopes = json::object();
    std::map<std::string, std::ofstream> plot_files;
    for (auto& [series, metrics] : samples) {
        for (auto& [metric, by_k] : metrics) {
            std::map<long, AggregateCell> cells;
            for (auto& [k, xs] : by_k) cells[k] = cell_stats(xs);
            for (auto& [k, cell] : cells)
                agg_out << series << ',' << metric << ',' << k << ',' << fmt(cell.median) << ','
                        << fmt(cell.p25) << ',' << fmt(cell.p75) << "\n";
            auto pf = plot_files.find(metric);
            if (pf == plot_files.end()) {
                pf = plot_files
                         .emplace(metric, std::ofstream(out_dir / ("plot_" + metric + ".csv"),
                                                        std::ios::binary))
                         .first;
                pf->second << "series,K,median\n";
            }
            for (auto& [k, cell] : cells)
                pf->second << series << ',' << k << ',' << fmt(cell.median) << "\n";
            if (metric == "subopt_welfare") {
                auto slope = loglog_slope(cells);
                if (slope)
                    slopes[series] = *slope;
                else
                    slopes[series] = nullptr;
            }
        }
    }
    std::ofstream slope_out(out_dir / "slopes.json", std::ios::binary);
    slope_out << slopes.dump(1) << "\n";
    return total_rows;
}

}  // namespace dvcg::harness
