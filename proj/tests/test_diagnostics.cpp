#include <doctest.h>

#include <cmath>

#include "dvcg/bounds.hpp"
#include "dvcg/dp.hpp"
#include "dvcg/instance_io.hpp"
#include "dvcg/learner.hpp"
#include "dvcg/mechanism.hpp"
#include "dvcg/rng.hpp"
#include "oracles.hpp"

using namespace dvcg;

TEST_CASE("shift_coefficient") {
    SUBCASE("identical measures give exactly one") {
        Instance inst = random_instance({3, 2, 2, 1, 1.0, 9});
        Rng rng(2);
        VisitationMeasure mu = visitation(inst.mdp, random_policy(inst.mdp.shape(), rng));
        CHECK(shift_coefficient(mu, mu) == 1.0);
    }
    SUBCASE("point mass over a quarter cell gives four") {
        Grid3 mu_g(1, 2, 2, 0.25);
        Grid3 nu_g(1, 2, 2, 0.0);
        nu_g(0, 1, 0) = 1.0;
        CHECK(shift_coefficient(VisitationMeasure(nu_g), VisitationMeasure(mu_g)) ==
              doctest::Approx(4.0));
    }
    SUBCASE("unsupported mass is infinite shift") {
        Grid3 mu_g(1, 2, 2, 0.0);
        mu_g(0, 0, 0) = 1.0;
        Grid3 nu_g(1, 2, 2, 0.0);
        nu_g(0, 1, 1) = 1.0;
        CHECK(std::isinf(shift_coefficient(VisitationMeasure(nu_g), VisitationMeasure(mu_g))));
    }
    SUBCASE("random residual ratios never exceed the coefficient") {
        for (uint64_t i = 0; i < 4; ++i) {
            Rng rng = Rng::derive(31337, {i});
            Instance inst = random_instance({3, 3, 2, 1, 1.0, 80 + i});
            const MdpShape shape = inst.mdp.shape();
            VisitationMeasure mu = visitation(inst.mdp, random_policy(shape, rng));
            VisitationMeasure nu = visitation(inst.mdp, random_policy(shape, rng));
            double coeff = shift_coefficient(nu, mu);
            Grid3 reward = inst.actual.total();
            for (int draw = 0; draw < 500; ++draw) {
                StagePolicy op = random_policy(shape, rng);
                int h = rng.uniform_int(shape.horizon);
                Grid3 f1 = random_boxed_q(shape, 1.0, rng);
                Grid3 f2 = random_boxed_q(shape, 1.0, rng);
                StepTable f2n = h + 1 < shape.horizon ? slice(f2, h + 1) : StepTable{};
                StepTable backup = bellman_backup(inst.mdp, slice(reward, h), op, f2n, h);
                double num = 0.0, den = 0.0;
                for (int s = 0; s < shape.num_states; ++s)
                    for (int a = 0; a < shape.num_actions; ++a) {
                        double resid = f1(h, s, a) - backup(s, a);
                        num += nu(h, s, a) * resid * resid;
                        den += mu(h, s, a) * resid * resid;
                    }
                if (den > 0.0) CHECK(num / den <= coeff * (1.0 + 1e-9));
            }
        }
    }
    SUBCASE("shape mismatch") {
        Grid3 a(1, 2, 2, 0.25), b(2, 2, 2, 0.125);
        CHECK_THROWS_AS(shift_coefficient(VisitationMeasure(a), VisitationMeasure(b)),
                        std::invalid_argument);
    }
}

TEST_CASE("error calculators") {
    SUBCASE("err_opt hand value and scalings") {
        double v = err_opt(2, 1.0, 2, 8);
        CHECK(v == doctest::Approx(2.0 * 4.0 * std::sqrt(2.0 * std::log(2.0) / 8.0))
                       .epsilon(1e-12));
        CHECK(err_opt(2, 1.0, 2, 32) == doctest::Approx(v / 2.0).epsilon(1e-12));
        CHECK(err_opt(2, 1.0, 1, 8) == 0.0);
        CHECK_THROWS_AS(err_opt(2, 1.0, 2, 0), std::invalid_argument);
    }
    SUBCASE("err_stat_unit hand values and monotonicity") {
        CHECK(err_stat_unit(3, 2.0, 0.0, 0.0, 0.0) == 0.0);
        CHECK(err_stat_unit(1, 1.0, 1.0, 0.0, 0.0) ==
              doctest::Approx(2.0 + std::sqrt(8.0)).epsilon(1e-12));
        Rng rng(6);
        for (int i = 0; i < 20; ++i) {
            double es = rng.uniform(), ef = rng.uniform(), eff = rng.uniform();
            double base = err_stat_unit(2, 1.5, es, ef, eff);
            CHECK(err_stat_unit(2, 1.5, es + 0.1, ef, eff) >= base);
            CHECK(err_stat_unit(2, 1.5, es, ef + 0.1, eff) >= base);
            CHECK(err_stat_unit(2, 1.5, es, ef, eff + 0.1) >= base);
        }
        CHECK_THROWS_AS(err_stat_unit(1, 1.0, -0.1, 0.0, 0.0), std::invalid_argument);
    }
}

TEST_CASE("theorem_bound") {
    ErrorBudget budget;
    budget.eps_s = 0.01;
    budget.eps_f = 0.0;
    budget.eps_ff = 0.0;
    budget.horizon = 2;
    budget.r_max = 1.0;
    budget.num_actions = 2;
    budget.iterations = 256;
    budget.num_agents = 2;

    SUBCASE("welfare assembles term by term") {
        budget.sqrt_shift_terms["avg_sqrt_c_iter_vs_opt"] = 1.0;
        double cube = 2.0 * std::cbrt(2.0) * std::cbrt(0.01);
        double unit = cube + std::sqrt(0.08);
        double expect = err_opt(2, 1.0, 2, 256) + cube + 2.0 * unit;
        CHECK(theorem_bound(budget, BoundKind::Welfare, Zeta::Pes, Zeta::Opt) ==
              doctest::Approx(expect).epsilon(1e-12));
    }
    SUBCASE("missing shift terms are named") {
        CHECK_THROWS_WITH_AS(theorem_bound(budget, BoundKind::Welfare, Zeta::Pes, Zeta::Opt),
                             doctest::Contains("avg_sqrt_c_iter_vs_opt"),
                             std::invalid_argument);
        CHECK_THROWS_WITH_AS(theorem_bound(budget, BoundKind::Seller, Zeta::Pes, Zeta::Opt),
                             doctest::Contains("sum_sqrt_c_g1_self"), std::invalid_argument);
    }
    SUBCASE("noiseless limit vanishes") {
        ErrorBudget clean = budget;
        clean.eps_s = 0.0;
        clean.iterations = 1 << 30;
        clean.num_actions = 1;  // log 1 = 0 kills the optimization term exactly
        clean.sqrt_shift_terms["avg_sqrt_c_iter_vs_opt"] = 1.0;
        CHECK(theorem_bound(clean, BoundKind::Welfare, Zeta::Pes, Zeta::Opt) ==
              doctest::Approx(0.0));
    }
    SUBCASE("seller bound scales by n when all shift terms coincide") {
        double c = 1.3;
        double n = budget.num_agents;
        budget.sqrt_shift_terms["sum_sqrt_c_g1_self"] = n * std::sqrt(c);
        budget.sqrt_shift_terms["sum_avg_sqrt_c_g1_iter_vs_opt"] = n * std::sqrt(c);
        budget.sqrt_shift_terms["sqrt_c_out_self"] = std::sqrt(c);
        double cube = 2.0 * std::cbrt(2.0) * std::cbrt(0.01);
        double unit = cube + std::sqrt(0.08);
        double expect =
            n * (err_opt(2, 1.0, 2, 256) + cube) + 2.0 * 3.0 * n * std::sqrt(c) * unit;
        CHECK(theorem_bound(budget, BoundKind::Seller, Zeta::Pes, Zeta::Opt) ==
              doctest::Approx(expect).epsilon(1e-12));
    }
    SUBCASE("all bound kinds evaluate with their required terms") {
        for (auto kind : {BoundKind::Welfare, BoundKind::Agent, BoundKind::Seller,
                          BoundKind::IndividualRationality, BoundKind::Truthfulness}) {
            for (auto zetas : {std::pair{Zeta::Pes, Zeta::Opt}, std::pair{Zeta::Opt, Zeta::Pes}}) {
                ErrorBudget b = budget;
                for (const auto& key : required_shift_terms(kind, zetas.first, zetas.second))
                    b.sqrt_shift_terms[key] = 1.0;
                CHECK(theorem_bound(b, kind, zetas.first, zetas.second) > 0.0);
            }
        }
    }
}

TEST_CASE("empirical_vs_bound") {
    std::map<std::string, double> measured{{"subopt_welfare", 0.0}, {"ir_min", 0.0}};
    std::map<std::string, double> bounds{{"subopt_welfare", 0.5}, {"ir_min", 0.5}};
    std::map<std::string, bool> lower{{"ir_min", true}};

    auto cmp = empirical_vs_bound(measured, bounds, lower);
    for (const auto& c : cmp) CHECK_FALSE(c.violated);

    measured["subopt_welfare"] = 0.6;
    measured["ir_min"] = -0.6;
    cmp = empirical_vs_bound(measured, bounds, lower);
    for (const auto& c : cmp) CHECK(c.violated);

    SUBCASE("equality at zero in the noiseless limit") {
        std::map<std::string, double> exact{{"subopt_welfare", 0.0}};
        std::map<std::string, double> zero_bound{{"subopt_welfare", 0.0}};
        auto res = empirical_vs_bound(exact, zero_bound, {});
        CHECK_FALSE(res[0].violated);
    }
    SUBCASE("missing bound is an error") {
        CHECK_THROWS_AS(empirical_vs_bound({{"x", 1.0}}, {}, {}), std::invalid_argument);
    }
}

TEST_CASE("measured welfare suboptimality respects the theory-mode bound") {
    // Desk-scale theory constants make the bound enormous; the comparison must
    // still be wired correctly end to end.
    Instance inst = make_m2_n1();
    RewardProfile rep = [&] {
        std::vector<Grid3> gs{inst.actual.agent(0)};
        return RewardProfile(1.0, inst.actual.seller(), std::move(gs), RewardRole::Reported);
    }();
    OfflineDataset d = sample_dataset(inst.mdp, rep,
                                      DataDistribution::uniform(inst.mdp.shape()), 2000, 4);
    VcgLearnConfig cfg;
    cfg.spi.iterations = 16;
    cfg.spi.eta = compute_lambda_eta(1.0, 2, 2, 16, 1.0, 0.0).eta;
    EvalConfig ev;
    ev.lambda = 10.0;
    cfg.spi.opt_eval = ev;
    cfg.spi.opt_eval.mode = EvalMode::Opt;
    cfg.spi.pes_eval = ev;
    cfg.spi.pes_eval.mode = EvalMode::Pes;
    LearnResult res = offline_vcg_learn(d, rep, cfg);

    ErrorBudget budget;
    budget.horizon = 2;
    budget.r_max = 1.0;
    budget.num_actions = 2;
    budget.iterations = 16;
    budget.num_agents = 1;
    double eta = cfg.spi.eta;
    budget.eps_s = epsilon_s(
        2000, 0.05, 1, 2, 1.0,
        covering_log_bounds(2, 2, 2, 16, eta, 1.0, f_covering_radius(2000, 2, 1.0)).log_cov_f,
        covering_log_bounds(2, 2, 2, 16, eta, 1.0, pi_covering_radius(2000, 2, 1.0)).log_cov_pi);

    // average sqrt shift of the pessimistic iterates against the optimum
    VisitationMeasure mu{DataDistribution::uniform(inst.mdp.shape()).table()};
    VisitationMeasure d_star =
        visitation(inst.mdp, exact_optimal(inst.mdp, inst.actual.total()).policy);
    double avg = std::sqrt(shift_coefficient(d_star, mu));
    budget.sqrt_shift_terms["avg_sqrt_c_iter_vs_opt"] = avg;

    double bound = theorem_bound(budget, BoundKind::Welfare, Zeta::Pes, Zeta::Opt);
    double measured = subopt_welfare(inst.mdp, inst.actual, PolicyChoice(res.policy));
    auto cmp = empirical_vs_bound({{"subopt_welfare", measured}}, {{"subopt_welfare", bound}}, {});
    CHECK_FALSE(cmp[0].violated);
}
