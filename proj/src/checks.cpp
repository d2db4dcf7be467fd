#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <vector>

#include "dvcg/dp.hpp"
#include "dvcg/harness.hpp"
#include "dvcg/rng.hpp"

// Invariant suites behind `dvcg check`; the acceptance gate reuses them with
// its own pinned parameters.

namespace dvcg::harness {

namespace {

Instance random_check_instance(uint64_t seed, int max_s, int max_a, int max_h, int max_n) {
    Rng rng = Rng::derive(seed, {0x636865636bULL});
    RandomInstanceSpec spec;
    spec.num_states = 2 + rng.uniform_int(max_s - 1);
    spec.num_actions = 2 + rng.uniform_int(max_a - 1);
    spec.horizon = 1 + rng.uniform_int(max_h);
    spec.num_agents = 1 + rng.uniform_int(max_n);
    spec.seed = rng.next_u64();
    return random_instance(spec);
}

}  // namespace

bool check_suite_desiderata(int instances, uint64_t seed, std::ostream& out, int max_s,
                            int max_a, int max_h, int max_n) {
    MisreportFamily family;
    family.kind = MisreportFamily::Kind::Grid;
    family.grid_levels = 3;
    family.max_profiles = 19683;  // 3^9

    bool all_ok = true;
    for (int i = 0; i < instances; ++i) {
        Instance inst =
            random_check_instance(seed + static_cast<uint64_t>(i), max_s, max_a, max_h, max_n);
        DesiderataReport report = check_desiderata(
            inst.mdp, inst.actual, family,
            [&](const RewardProfile& reported) { return exact_vcg(inst.mdp, reported); });
        bool ok = report.welfare_gap <= 1e-9 && report.min_agent_utility >= -1e-9 &&
                  report.max_truthfulness_gain <= 1e-9 &&
                  report.min_reported_value_minus_price >= -1e-9;
        all_ok = all_ok && ok;
        out << (ok ? "[PASS] " : "[FAIL] ") << "desiderata " << inst.name
            << " gap=" << report.welfare_gap << " ir=" << report.min_agent_utility
            << " gain=" << report.max_truthfulness_gain
            << " reported_floor=" << report.min_reported_value_minus_price << "\n";
    }
    return all_ok;
}

bool check_suite_pessimism(int triples, long k, uint64_t seed, std::ostream& out,
                           double tolerance_scale, double min_pass_rate, bool* induced_gap_ok) {
    int passed = 0;
    bool gap_ok = true;
    for (int t = 0; t < triples; ++t) {
        Rng rng = Rng::derive(seed, {0x706573ULL, static_cast<uint64_t>(t)});
        Instance inst = random_check_instance(rng.next_u64(), 3, 3, 3, 2);
        const MdpShape shape = inst.mdp.shape();
        StagePolicy policy = random_policy(shape, rng);

        RewardProfile reported = [&] {
            std::vector<Grid3> gs;
            for (int i = 0; i < inst.actual.num_agents(); ++i) gs.push_back(inst.actual.agent(i));
            return RewardProfile(inst.actual.r_max(), inst.actual.seller(), std::move(gs),
                                 RewardRole::Reported);
        }();
        RewardSelector selector =
            (inst.actual.num_agents() > 1 && rng.uniform() < 0.5)
                ? RewardSelector::exclude(rng.uniform_int(inst.actual.num_agents()))
                : RewardSelector::total();

        OfflineDataset data = sample_dataset(
            inst.mdp, reported, DataDistribution::uniform(shape), k, rng.next_u64());
        DatasetIndex index(data);

        EvalConfig cfg;
        cfg.lambda = 10.0;
        cfg.optimizer.tolerance = 1e-12;
        EvalConfig pes = cfg;
        pes.mode = EvalMode::Pes;
        EvalConfig opt = cfg;
        opt.mode = EvalMode::Opt;
        EvalResult ev_pes = evaluate_policy(index, reported, selector, policy, pes);
        EvalResult ev_opt = evaluate_policy(index, reported, selector, policy, opt);

        Grid3 reward = selector_reward_table(inst.actual, selector);
        QTable truth = exact_policy_q(inst.mdp, reward, policy, inst.actual.r_max());
        double v_truth = 0.0;
        for (int a = 0; a < shape.num_actions; ++a)
            v_truth += policy(0, shape.initial_state, a) * truth(0, shape.initial_state, a);

        double tol = tolerance_scale * shape.horizon * inst.actual.r_max();
        bool ok = ev_pes.value_at_start <= v_truth + tol && ev_opt.value_at_start >= v_truth - tol;
        if (ok) ++passed;
        out << (ok ? "[PASS] " : "[FAIL] ") << "pessimism/optimism " << inst.name
            << " pes=" << ev_pes.value_at_start << " opt=" << ev_opt.value_at_start
            << " truth=" << v_truth << " tol=" << tol << "\n";

        // Induced-environment error bound: the gap at the start state never
        // exceeds the visitation-weighted Bellman residual of the output.
        VisitationMeasure d = visitation(inst.mdp, policy);
        for (const EvalResult* ev : {&ev_pes, &ev_opt}) {
            double lhs = std::fabs(ev->value_at_start - v_truth);
            double rhs = 0.0;
            StepTable next;
            for (int h = shape.horizon - 1; h >= 0; --h) {
                StepTable backup =
                    bellman_backup(inst.mdp, slice(reward, h), policy, next, h);
                for (int s = 0; s < shape.num_states; ++s)
                    for (int a = 0; a < shape.num_actions; ++a)
                        rhs += d(h, s, a) * std::fabs(ev->q(h, s, a) - backup(s, a));
                next = slice(ev->q.values(), h);
            }
            if (lhs > rhs + 1e-8) {
                gap_ok = false;
                out << "[FAIL] induced-gap " << inst.name << " lhs=" << lhs << " rhs=" << rhs
                    << "\n";
            }
        }
    }
    double rate = static_cast<double>(passed) / static_cast<double>(triples);
    bool ok = rate >= min_pass_rate;
    out << (ok ? "[PASS] " : "[FAIL] ") << "pessimism pass rate " << rate << " (need >= "
        << min_pass_rate << ")\n";
    if (induced_gap_ok != nullptr) *induced_gap_ok = gap_ok;
    return ok;
}

bool check_suite_regret(int sequences, const std::vector<int>& horizons_t, uint64_t seed,
                        std::ostream& out) {
    bool all_ok = true;
    for (int T : horizons_t) {
        double worst_slack = std::numeric_limits<double>::infinity();
        bool ok = true;
        for (int q = 0; q < sequences; ++q) {
            Rng rng = Rng::derive(seed, {0x726567ULL, static_cast<uint64_t>(T),
                                         static_cast<uint64_t>(q)});
            MdpShape shape{1 + rng.uniform_int(3), 2 + rng.uniform_int(3), 1 + rng.uniform_int(3),
                           0};
            const double r_max = 1.0 + rng.uniform();
            double eta = compute_lambda_eta(r_max, shape.horizon, shape.num_actions, T, 1.0, 0.0)
                             .eta;

            StagePolicy pi = StagePolicy::uniform(shape);
            std::vector<double> played(
                static_cast<size_t>(shape.horizon) * shape.num_states, 0.0);
            Grid3 summed(shape.horizon, shape.num_states, shape.num_actions, 0.0);
            for (int t = 0; t < T; ++t) {
                Grid3 qt = random_boxed_q(shape, r_max, rng);
                for (int h = 0; h < shape.horizon; ++h)
                    for (int s = 0; s < shape.num_states; ++s) {
                        double dot = 0.0;
                        for (int a = 0; a < shape.num_actions; ++a) {
                            dot += pi(h, s, a) * qt(h, s, a);
                            summed(h, s, a) += qt(h, s, a);
                        }
                        played[static_cast<size_t>(h) * shape.num_states + s] += dot;
                    }
                pi = mirror_descent_update(pi, qt, eta);
            }
            double bound = 2.0 * shape.horizon * r_max *
                           std::sqrt(2.0 * T * std::log(shape.num_actions));
            for (int h = 0; h < shape.horizon && ok; ++h)
                for (int s = 0; s < shape.num_states && ok; ++s) {
                    double best = summed(h, s, 0);
                    for (int a = 1; a < shape.num_actions; ++a)
                        best = std::max(best, summed(h, s, a));
                    double regret =
                        best - played[static_cast<size_t>(h) * shape.num_states + s];
                    worst_slack = std::min(worst_slack, bound - regret);
                    if (regret > bound) ok = false;  // zero tolerance
                }
            if (!ok) break;
        }
        all_ok = all_ok && ok;
        out << (ok ? "[PASS] " : "[FAIL] ") << "mirror-descent regret T=" << T
            << " sequences=" << sequences << " min_slack=" << worst_slack << "\n";
    }
    return all_ok;
}

bool check_suite_shift(int instances, int draws, uint64_t seed, std::ostream& out) {
    bool all_ok = true;
    for (int i = 0; i < instances; ++i) {
        Rng rng = Rng::derive(seed, {0x736866ULL, static_cast<uint64_t>(i)});
        Instance inst = random_check_instance(rng.next_u64(), 3, 3, 3, 2);
        const MdpShape shape = inst.mdp.shape();
        const double r_max = inst.actual.r_max();

        VisitationMeasure mu = visitation(inst.mdp, random_policy(shape, rng));
        VisitationMeasure nu = visitation(inst.mdp, random_policy(shape, rng));
        double coeff = shift_coefficient(nu, mu);
        if (shift_coefficient(mu, mu) != 1.0) {
            all_ok = false;
            out << "[FAIL] shift-coefficient self ratio differs from 1 on " << inst.name << "\n";
            continue;
        }

        bool ok = true;
        double worst = 0.0;
        for (int d = 0; d < draws && ok; ++d) {
            StagePolicy op_policy = random_policy(shape, rng);
            int h = rng.uniform_int(shape.horizon);
            RewardSelector selector =
                (inst.actual.num_agents() > 1 && rng.uniform() < 0.5)
                    ? RewardSelector::exclude(rng.uniform_int(inst.actual.num_agents()))
                    : RewardSelector::total();
            Grid3 reward = selector_reward_table(inst.actual, selector);
            Grid3 f1 = random_boxed_q(shape, r_max, rng);
            Grid3 f2 = random_boxed_q(shape, r_max, rng);

            StepTable f2_next;
            if (h + 1 < shape.horizon) f2_next = slice(f2, h + 1);
            StepTable backup = bellman_backup(inst.mdp, slice(reward, h), op_policy, f2_next, h);
            double num = 0.0, den = 0.0;
            for (int s = 0; s < shape.num_states; ++s)
                for (int a = 0; a < shape.num_actions; ++a) {
                    double resid = f1(h, s, a) - backup(s, a);
                    num += nu(h, s, a) * resid * resid;
                    den += mu(h, s, a) * resid * resid;
                }
            if (den == 0.0) continue;
            double ratio = num / den;
            worst = std::max(worst, ratio);
            if (ratio > coeff * (1.0 + 1e-9)) ok = false;
        }
        all_ok = all_ok && ok;
        out << (ok ? "[PASS] " : "[FAIL] ") << "shift-soundness " << inst.name
            << " coeff=" << coeff << " worst_ratio=" << worst << "\n";
    }
    return all_ok;
}

int run_check(const std::string& suite, uint64_t seed, std::ostream& out) {
    if (suite == "desiderata") return check_suite_desiderata(10, seed, out) ? 0 : 1;
    if (suite == "pessimism")
        return check_suite_pessimism(8, 10000, seed, out, 0.05, 0.95) ? 0 : 1;
    if (suite == "induced-gap") {
        bool gap_ok = false;
        check_suite_pessimism(8, 10000, seed, out, 0.05, 0.0, &gap_ok);
        return gap_ok ? 0 : 1;
    }
    if (suite == "regret") return check_suite_regret(200, {16, 64, 256}, seed, out) ? 0 : 1;
    if (suite == "shift-soundness") return check_suite_shift(5, 2000, seed, out) ? 0 : 1;
    out << "unknown suite \"" << suite
        << "\"; available: desiderata, pessimism, induced-gap, regret, shift-soundness\n";
    return 2;
}

}  // namespace dvcg::harness
