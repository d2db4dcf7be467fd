#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "dvcg/dp.hpp"
#include "dvcg/instance_io.hpp"
#include "dvcg/mdp.hpp"
#include "dvcg/rng.hpp"
#include "oracles.hpp"

using namespace dvcg;

namespace {

Instance m2() { return make_m2_n1(); }

Grid3 constant_grid(const MdpShape& shape, double v) {
    return Grid3(shape.horizon, shape.num_states, shape.num_actions, v);
}

}  // namespace

TEST_CASE("TabularMdp validates its inputs") {
    TransitionTable p(1, 2, 1, 0.0);
    p(0, 0, 0, 0) = 0.6;
    p(0, 0, 0, 1) = 0.5;  // sums to 1.1
    p(0, 1, 0, 0) = 1.0;
    CHECK_THROWS_AS(TabularMdp(2, 1, 1, p, 0), std::invalid_argument);
    p(0, 0, 0, 1) = 0.4;
    CHECK_NOTHROW(TabularMdp(2, 1, 1, p, 0));
    CHECK_THROWS_AS(TabularMdp(2, 1, 1, p, 2), std::invalid_argument);  // s0 out of range
    CHECK_THROWS_AS(TabularMdp(3, 1, 1, p, 0), std::invalid_argument);  // wrong dims
}

TEST_CASE("StagePolicy and profiles validate") {
    Grid3 probs(1, 1, 2, 0.5);
    CHECK_NOTHROW(StagePolicy{probs});
    probs(0, 0, 0) = 0.7;
    CHECK_THROWS_AS(StagePolicy{probs}, std::invalid_argument);

    MdpShape shape{2, 2, 2, 0};
    Grid3 bad = constant_grid(shape, 1.5);  // outside [0, 1]
    Grid3 zero = constant_grid(shape, 0.0);
    CHECK_THROWS_AS(RewardProfile(1.0, zero, {bad}, RewardRole::Actual), std::invalid_argument);
    CHECK_THROWS_AS(RewardProfile(0.5, zero, {zero}, RewardRole::Actual),
                    std::invalid_argument);  // r_max < 1
    // seller range is [-r_max, r_max - n]
    Grid3 seller = constant_grid(shape, 0.5);
    CHECK_THROWS_AS(RewardProfile(2.0, seller, {zero, zero, zero}, RewardRole::Actual),
                    std::invalid_argument);
}

TEST_CASE("bellman_backup basics") {
    Instance inst = m2();
    const auto& mdp = inst.mdp;
    StagePolicy uniform = StagePolicy::uniform(mdp.shape());
    Grid3 r = inst.actual.agent(0);

    SUBCASE("zero continuation returns the reward") {
        StepTable out = bellman_backup(mdp, slice(r, 1), uniform, StepTable{}, 1);
        for (int s = 0; s < 2; ++s)
            for (int a = 0; a < 2; ++a) CHECK(out(s, a) == doctest::Approx(r(1, s, a)));
    }
    SUBCASE("constant continuation with zero reward is constant") {
        StepTable f_next(2, 2, 3.25);
        StepTable zero_r(2, 2, 0.0);
        StepTable out = bellman_backup(mdp, zero_r, uniform, f_next, 0);
        for (int s = 0; s < 2; ++s)
            for (int a = 0; a < 2; ++a) CHECK(out(s, a) == doctest::Approx(3.25));
    }
    SUBCASE("hand-evaluated step on the chain") {
        StepTable out = bellman_backup(mdp, slice(r, 0), uniform, StepTable{2, 2, 0.0}, 0);
        CHECK(out(0, 0) == doctest::Approx(0.0));
        CHECK(out(0, 1) == doctest::Approx(0.0));
        CHECK(out(1, 0) == doctest::Approx(1.0));
        CHECK(out(1, 1) == doctest::Approx(1.0));
    }
    SUBCASE("dimension mismatch is an input error") {
        CHECK_THROWS_AS(bellman_backup(mdp, StepTable(3, 2, 0.0), uniform, StepTable{}, 1),
                        std::invalid_argument);
    }
    SUBCASE("additivity in the reward at fixed continuation") {
        Rng rng(42);
        Grid3 r1(2, 2, 2, 0.0), r2(2, 2, 2, 0.0);
        for (double& v : r1.data()) v = rng.uniform(-1, 1);
        for (double& v : r2.data()) v = rng.uniform(-1, 1);
        StepTable f(2, 2, 0.0);
        for (double& v : f.data()) v = rng.uniform(-1, 1);
        Grid3 sum = r1;
        for (size_t i = 0; i < sum.data().size(); ++i) sum.data()[i] += r2.data()[i];
        StepTable lhs = bellman_backup(mdp, slice(sum, 0), uniform, f, 0);
        StepTable a = bellman_backup(mdp, slice(r1, 0), uniform, f, 0);
        StepTable b = bellman_backup(mdp, slice(r2, 0), uniform, StepTable(2, 2, 0.0), 0);
        for (size_t i = 0; i < lhs.data().size(); ++i)
            CHECK(std::fabs(lhs.data()[i] - a.data()[i] - b.data()[i]) < 1e-12);
    }
}

TEST_CASE("exact_policy_q matches independent oracles") {
    Instance inst = m2();
    const auto& mdp = inst.mdp;
    StagePolicy uniform = StagePolicy::uniform(mdp.shape());
    Grid3 r = inst.actual.agent(0);

    SUBCASE("zero rewards give zero Q") {
        QTable q = exact_policy_q(mdp, constant_grid(mdp.shape(), 0.0), uniform, 1.0);
        for (double v : q.values().data()) CHECK(v == 0.0);
    }
    SUBCASE("horizon one is the reward itself") {
        TransitionTable p(1, 2, 2, 0.0);
        for (int s = 0; s < 2; ++s)
            for (int a = 0; a < 2; ++a) p(0, s, a, 0) = 1.0;
        TabularMdp one(2, 2, 1, std::move(p), 0);
        Grid3 r1(1, 2, 2, 0.0);
        r1(0, 0, 1) = 0.75;
        QTable q = exact_policy_q(one, r1, StagePolicy::uniform(one.shape()), 1.0);
        CHECK(q(0, 0, 1) == doctest::Approx(0.75));
        CHECK(q(0, 1, 0) == doctest::Approx(0.0));
    }
    SUBCASE("uniform value on the chain is 0.5, via brute force") {
        // The uniform policy's value equals the average over all 16
        // deterministic policies (the value is multilinear in the rows).
        double avg = 0.0;
        auto dets = oracle::deterministic_policies(mdp.shape());
        REQUIRE(dets.size() == 16);
        for (const auto& pi : dets) avg += oracle::policy_value_recursive(mdp, r, pi);
        avg /= static_cast<double>(dets.size());
        CHECK(avg == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(policy_value(mdp, r, uniform) == doctest::Approx(avg).epsilon(1e-12));
    }
    SUBCASE("Monte-Carlo agreement within three standard errors") {
        auto est = oracle::mc_policy_value(mdp, r, uniform, 100000, 99);
        double exact = policy_value(mdp, r, uniform);
        CHECK(std::fabs(est.mean - exact) <= 3.0 * est.std_error);
        Instance rnd = random_instance({3, 2, 3, 1, 1.0, 77});
        Rng rng(5);
        StagePolicy pi = random_policy(rnd.mdp.shape(), rng);
        Grid3 rr = rnd.actual.total();
        auto est2 = oracle::mc_policy_value(rnd.mdp, rr, pi, 100000, 123);
        CHECK(std::fabs(est2.mean - policy_value(rnd.mdp, rr, pi)) <= 3.0 * est2.std_error);
    }
}

TEST_CASE("exact_optimal") {
    Instance inst = m2();
    const auto& mdp = inst.mdp;
    Grid3 r = inst.actual.agent(0);

    SUBCASE("zero rewards: zero values, lowest-index tie-break") {
        OptimalSolution sol = exact_optimal(mdp, constant_grid(mdp.shape(), 0.0));
        CHECK(sol.value_at_start == 0.0);
        for (int h = 0; h < 2; ++h)
            for (int s = 0; s < 2; ++s) CHECK(sol.policy(h, s, 0) == 1.0);
    }
    SUBCASE("chain optimum takes the swap, value 1") {
        OptimalSolution sol = exact_optimal(mdp, r);
        CHECK(sol.value_at_start == doctest::Approx(1.0));
        CHECK(sol.value_at_start ==
              doctest::Approx(oracle::brute_force_optimal_value(mdp, r)).epsilon(1e-12));
        CHECK(sol.policy(0, 0, 1) == 1.0);  // swap into the rewarding state
    }
    SUBCASE("constant-welfare profile: everything optimal, tie-break all-zeros") {
        Instance two = make_m2_n2();
        Grid3 total = two.actual.total();
        OptimalSolution sol = exact_optimal(two.mdp, total);
        CHECK(sol.value_at_start == doctest::Approx(2.0));
        for (int h = 0; h < 2; ++h)
            for (int s = 0; s < 2; ++s) CHECK(sol.policy(h, s, 0) == 1.0);
    }
    SUBCASE("dominates random policies") {
        for (uint64_t i = 0; i < 5; ++i) {
            Instance rnd = random_instance({3, 3, 3, 2, 0.0, 1000 + i});
            Grid3 total = rnd.actual.total();
            double vstar = exact_optimal(rnd.mdp, total).value_at_start;
            Rng rng = Rng::derive(17, {i});
            for (int p = 0; p < 100; ++p) {
                StagePolicy pi = random_policy(rnd.mdp.shape(), rng);
                CHECK(policy_value(rnd.mdp, total, pi) <= vstar + 1e-9);
            }
        }
    }
}

TEST_CASE("visitation") {
    Instance inst = m2();
    const auto& mdp = inst.mdp;
    StagePolicy uniform = StagePolicy::uniform(mdp.shape());

    SUBCASE("one step is the first policy row") {
        TransitionTable p(1, 2, 2, 0.0);
        for (int s = 0; s < 2; ++s)
            for (int a = 0; a < 2; ++a) p(0, s, a, s) = 1.0;
        TabularMdp one(2, 2, 1, std::move(p), 0);
        VisitationMeasure d = visitation(one, StagePolicy::uniform(one.shape()));
        CHECK(d(0, 0, 0) == doctest::Approx(0.5));
        CHECK(d(0, 0, 1) == doctest::Approx(0.5));
        CHECK(d(0, 1, 0) == 0.0);
    }
    SUBCASE("deterministic policy on the deterministic chain is a point-mass path") {
        Grid3 probs(2, 2, 2, 0.0);
        for (int h = 0; h < 2; ++h)
            for (int s = 0; s < 2; ++s) probs(h, s, 1) = 1.0;  // always swap
        VisitationMeasure d = visitation(mdp, StagePolicy(probs));
        CHECK(d(0, 0, 1) == doctest::Approx(1.0));
        CHECK(d(1, 1, 1) == doctest::Approx(1.0));
    }
    SUBCASE("two-step uniform spread on the chain") {
        VisitationMeasure d = visitation(mdp, uniform);
        CHECK(d(0, 0, 0) == doctest::Approx(0.5));
        CHECK(d(0, 0, 1) == doctest::Approx(0.5));
        for (int s = 0; s < 2; ++s)
            for (int a = 0; a < 2; ++a) CHECK(d(1, s, a) == doctest::Approx(0.25));
    }
    SUBCASE("occupancy-weighted rewards reproduce the value") {
        for (uint64_t i = 0; i < 5; ++i) {
            Instance rnd = random_instance({3, 2, 3, 1, 0.0, 400 + i});
            Rng rng = Rng::derive(3, {i});
            StagePolicy pi = random_policy(rnd.mdp.shape(), rng);
            Grid3 total = rnd.actual.total();
            VisitationMeasure d = visitation(rnd.mdp, pi);
            double acc = 0.0;
            for (int h = 0; h < rnd.mdp.horizon(); ++h)
                for (int s = 0; s < rnd.mdp.num_states(); ++s)
                    for (int a = 0; a < rnd.mdp.num_actions(); ++a)
                        acc += d(h, s, a) * total(h, s, a);
            CHECK(std::fabs(acc - policy_value(rnd.mdp, total, pi)) < 1e-9);
        }
    }
}

TEST_CASE("mixture_value") {
    Instance inst = m2();
    const auto& mdp = inst.mdp;
    Grid3 r = inst.actual.agent(0);
    StagePolicy uniform = StagePolicy::uniform(mdp.shape());
    StagePolicy best = exact_optimal(mdp, r).policy;

    CHECK(mixture_value(mdp, r, MixturePolicy({uniform})) ==
          doctest::Approx(policy_value(mdp, r, uniform)));
    CHECK(mixture_value(mdp, r, MixturePolicy({uniform, uniform})) ==
          doctest::Approx(policy_value(mdp, r, uniform)));
    CHECK(mixture_value(mdp, r, MixturePolicy({uniform, best})) == doctest::Approx(0.75));
    CHECK_THROWS_AS(MixturePolicy(std::vector<StagePolicy>{}), std::invalid_argument);
    StagePolicy other = StagePolicy::uniform({3, 2, 2, 0});
    CHECK_THROWS_AS(MixturePolicy({uniform, other}), std::invalid_argument);
}

TEST_CASE("QTable enforces the per-step box") {
    Grid3 ok(2, 1, 1, 0.0);
    ok(0, 0, 0) = 1.9;   // step-0 box is [-2, 2] for H = 2, r_max = 1
    ok(1, 0, 0) = -0.9;  // step-1 box is [-1, 1]
    CHECK_NOTHROW(QTable{ok, 1.0});
    ok(1, 0, 0) = -1.5;
    CHECK_THROWS_AS(QTable(ok, 1.0), std::invalid_argument);
}

TEST_CASE("exact_policy_q stays inside the box for admissible profiles") {
    for (uint64_t i = 0; i < 4; ++i) {
        Instance rnd = random_instance({3, 2, 2, 2, 0.0, 900 + i});
        Rng rng = Rng::derive(11, {i});
        StagePolicy pi = random_policy(rnd.mdp.shape(), rng);
        // QTable construction itself enforces the box; this must not throw.
        CHECK_NOTHROW(exact_policy_q(rnd.mdp, rnd.actual.total(), pi, rnd.actual.r_max()));
        CHECK_NOTHROW(exact_policy_q(rnd.mdp, rnd.actual.excluding(0), pi, rnd.actual.r_max()));
    }
}

TEST_CASE("instance files round trip") {
    Instance inst = random_instance({3, 2, 2, 2, 0.0, 31});
    auto dir = std::filesystem::temp_directory_path() / "dvcg_test_io";
    std::filesystem::create_directories(dir);
    auto path = dir / "instance.json";
    save_instance(inst, path);
    Instance back = load_instance(path);
    CHECK(back.name == inst.name);
    CHECK(back.mdp.num_states() == inst.mdp.num_states());
    CHECK(back.mdp.initial_state() == inst.mdp.initial_state());
    for (int h = 0; h < inst.mdp.horizon(); ++h)
        for (int s = 0; s < inst.mdp.num_states(); ++s)
            for (int a = 0; a < inst.mdp.num_actions(); ++a) {
                for (int sp = 0; sp < inst.mdp.num_states(); ++sp)
                    CHECK(back.mdp.transition()(h, s, a, sp) ==
                          inst.mdp.transition()(h, s, a, sp));
                CHECK(back.actual.agent(1)(h, s, a) == inst.actual.agent(1)(h, s, a));
            }
    auto bad = dir / "bad.json";
    std::ofstream(bad) << "{ not json";
    CHECK_THROWS_WITH_AS(load_instance(bad), doctest::Contains("parse error"),
                         std::runtime_error);
}
