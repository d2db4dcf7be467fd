#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "dvcg/harness.hpp"

using namespace dvcg;
using namespace dvcg::harness;

namespace {

std::string minimal_learn_config(const std::string& extra = "") {
    return std::string(R"({
      "schema_version": 1,
      "instance": {"builtin": "m2_n1"},
      "data": {"mu": "uniform", "K": [60, 120], "seeds": [1, 2]},
      "learner": {"zeta1": "PES", "zeta2": "OPT", "T": 4, "lambda_mode": "fixed", "lambda": 10.0,
                  "eval": {"max_iterations": 2000, "tolerance": 1e-10}},
      "evaluation": {"misreports": {"kind": "scale", "levels": [0.0]}}
    )") + extra + "}";
}

}  // namespace

TEST_CASE("config parsing") {
    SUBCASE("minimal config parses with defaults") {
        RunConfig cfg = parse_config(minimal_learn_config());
        CHECK(cfg.data.k_values.size() == 2);
        CHECK(cfg.learner.iterations == 4);
        CHECK(cfg.evaluation.family.kind == MisreportFamily::Kind::Scale);
    }
    SUBCASE("missing required fields are named") {
        CHECK_THROWS_WITH_AS(parse_config(R"({"instance": {"builtin": "m2_n1"}})"),
                             doctest::Contains("schema_version"), ConfigError);
        CHECK_THROWS_WITH_AS(
            parse_config(R"({"schema_version": 1, "instance": {"random": {"S": 2, "A": 2, "n": 1}}})"),
            doctest::Contains("config.instance.random.H"), ConfigError);
    }
    SUBCASE("invalid values are rejected") {
        CHECK_THROWS_WITH_AS(
            parse_config(
                R"({"schema_version": 1, "instance": {"builtin": "m2_n1"}, "data": {"K": [0]}})"),
            doctest::Contains("config.data.K"), ConfigError);
        CHECK_THROWS_WITH_AS(
            parse_config(
                R"({"schema_version": 1, "instance": {"builtin": "m2_n1"}, "data": {"seeds": [3, 3]}})"),
            doctest::Contains("seeds"), ConfigError);
        CHECK_THROWS_WITH_AS(
            parse_config(
                R"({"schema_version": 1, "instance": {"builtin": "m2_n1"}, "learner": {"zeta1": "opt"}})"),
            doctest::Contains("zeta1"), ConfigError);
    }
}

TEST_CASE("run_exact on the chain") {
    RunConfig cfg = parse_config(R"({
      "schema_version": 1,
      "instance": {"builtin": "m2_n1"},
      "evaluation": {"misreports": {"kind": "scale", "levels": [0.0, 0.5, 1.0]}}
    })");
    ExactReport report = run_exact(cfg);
    CHECK(report.ok);
    CHECK(report.desiderata.welfare_gap <= 1e-9);
    CHECK(report.desiderata.min_agent_utility >= -1e-9);
    CHECK(report.prices[0] == doctest::Approx(0.0));

    auto dir = std::filesystem::temp_directory_path() / "dvcg_test_exact";
    write_exact_report(report, dir);
    CHECK(std::filesystem::exists(dir / "exact_report.json"));
}

TEST_CASE("run_learn is deterministic and parallel-stable") {
    RunConfig cfg = parse_config(minimal_learn_config());
    LearnReport a = run_learn(cfg, 1);
    LearnReport b = run_learn(cfg, 1);
    LearnReport c = run_learn(cfg, 2);
    REQUIRE(a.rows.size() == 4);
    CHECK(report_csv(a) == report_csv(b));
    CHECK(report_csv(a) == report_csv(c));

    SUBCASE("rows carry every configured metric") {
        for (const auto& row : a.rows) {
            CHECK(row.prices.size() == 1);
            CHECK(row.ir_computed);
            CHECK(row.truth_computed);
        }
    }
    SUBCASE("aggregates and writers") {
        Aggregates agg = aggregate(a);
        CHECK(agg.table.count("subopt_welfare") == 1);
        CHECK(agg.table["subopt_welfare"].size() == 2);  // two K values
        auto dir = std::filesystem::temp_directory_path() / "dvcg_test_learn";
        write_learn_report(a, dir);
        CHECK(std::filesystem::exists(dir / "report.csv"));
        CHECK(std::filesystem::exists(dir / "report.json"));
    }
}

TEST_CASE("sweep_report merges and aggregates") {
    RunConfig cfg = parse_config(minimal_learn_config());
    auto dir = std::filesystem::temp_directory_path() / "dvcg_test_sweep";
    std::filesystem::create_directories(dir);

    LearnReport a = run_learn(cfg, 1);
    write_learn_report(a, dir / "a");

    RunConfig cfg2 = cfg;
    cfg2.data.seeds = {7, 9};
    LearnReport b = run_learn(cfg2, 1);
    write_learn_report(b, dir / "b");

    SUBCASE("single report passes through") {
        long rows = sweep_report({dir / "a" / "report.csv"}, dir / "one");
        CHECK(rows == 4);
        CHECK(std::filesystem::exists(dir / "one" / "aggregates.csv"));
        CHECK(std::filesystem::exists(dir / "one" / "plot_subopt_welfare.csv"));
        std::ifstream slopes(dir / "one" / "slopes.json");
        std::string text((std::istreambuf_iterator<char>(slopes)),
                         std::istreambuf_iterator<char>());
        CHECK(text.find("m2_n1/PES-OPT") != std::string::npos);
    }
    SUBCASE("disjoint seeds union") {
        long rows =
            sweep_report({dir / "a" / "report.csv", dir / "b" / "report.csv"}, dir / "two");
        CHECK(rows == 8);
    }
    SUBCASE("incompatible schemas are rejected") {
        std::ofstream bad(dir / "bad.csv");
        bad << "foo,bar\n1,2\n";
        bad.close();
        CHECK_THROWS_WITH_AS(
            sweep_report({dir / "a" / "report.csv", dir / "bad.csv"}, dir / "broken"),
            doctest::Contains("incompatible"), std::runtime_error);
    }
}

TEST_CASE("check dispatch honors the exit-code contract") {
    std::ostringstream sink;
    CHECK(run_check("unknown-suite", 1, sink) == 2);
    CHECK(sink.str().find("unknown suite") != std::string::npos);
    CHECK(check_suite_regret(5, {8}, 3, sink));
}

TEST_CASE("disabled metrics carry an explicit not-computed marker") {
    RunConfig cfg = parse_config(minimal_learn_config());
    cfg.evaluation.ir = false;
    cfg.evaluation.truthfulness = false;
    cfg.data.k_values = {40};
    cfg.data.seeds = {1};
    LearnReport report = run_learn(cfg, 1);
    std::string csv = report_csv(report);
    CHECK(csv.find(",NA,NA,") != std::string::npos);
}

TEST_CASE("report sidecar carries the theory-bound comparison and traces") {
    RunConfig cfg = parse_config(minimal_learn_config());
    cfg.data.k_values = {40};
    cfg.data.seeds = {1};
    LearnReport report = run_learn(cfg, 1);
    std::string sidecar = report_aggregates_json(report);
    CHECK(sidecar.find("bound_comparison") != std::string::npos);
    CHECK(sidecar.find("\"violated\": false") != std::string::npos);
    CHECK(sidecar.find("welfare_f1_trace") != std::string::npos);
    REQUIRE(report.rows.size() == 1);
    CHECK(report.rows[0].welfare_f1_trace.size() == 4);  // one entry per iterate
    CHECK(report.rows[0].g1.size() == 1);
}
