#include "dvcg/dp.hpp"

#include <stdexcept>

namespace dvcg {

namespace {

void check_policy_shape(const TabularMdp& mdp, const StagePolicy& policy) {
    if (policy.horizon() != mdp.horizon() || policy.num_states() != mdp.num_states() ||
        policy.num_actions() != mdp.num_actions())
        throw std::invalid_argument("policy dimensions do not match the MDP");
}

void check_reward_shape(const TabularMdp& mdp, const Grid3& reward) {
    if (reward.horizon() != mdp.horizon() || reward.num_states() != mdp.num_states() ||
        reward.num_actions() != mdp.num_actions())
        throw std::invalid_argument("reward dimensions do not match the MDP");
}

// E_{a ~ pi_h(.|s)}[f(s, a)] for every state.
std::vector<double> expected_over_policy(const StepTable& f, const StagePolicy& policy, int h) {
    std::vector<double> v(static_cast<size_t>(f.num_states()), 0.0);
    for (int s = 0; s < f.num_states(); ++s) {
        double acc = 0.0;
        for (int a = 0; a < f.num_actions(); ++a) acc += policy(h, s, a) * f(s, a);
        v[static_cast<size_t>(s)] = acc;
    }
    return v;
}

}  // namespace

StepTable bellman_backup(const TabularMdp& mdp, const StepTable& reward_h,
                         const StagePolicy& policy, const StepTable& f_next, int h) {
    check_policy_shape(mdp, policy);
    const int S = mdp.num_states(), A = mdp.num_actions();
    if (reward_h.num_states() != S || reward_h.num_actions() != A)
        throw std::invalid_argument("bellman_backup: reward slice has wrong dimensions");
    if (h < 0 || h >= mdp.horizon())
        throw std::invalid_argument("bellman_backup: step index out of range");
    const bool terminal = (h == mdp.horizon() - 1);
    if (!terminal && (f_next.num_states() != S || f_next.num_actions() != A))
        throw std::invalid_argument("bellman_backup: continuation slice has wrong dimensions");

    StepTable out(S, A);
    std::vector<double> v_next;
    if (!terminal) v_next = expected_over_policy(f_next, policy, h + 1);
    for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) {
            double acc = reward_h(s, a);
            if (!terminal) {
                auto row = mdp.transition().row(h, s, a);
                for (int sp = 0; sp < S; ++sp) acc += row[sp] * v_next[static_cast<size_t>(sp)];
            }
            out(s, a) = acc;
        }
    }
    return out;
}

QTable exact_policy_q(const TabularMdp& mdp, const Grid3& reward,
                      const StagePolicy& policy, double r_max) {
    check_policy_shape(mdp, policy);
    check_reward_shape(mdp, reward);
    const int H = mdp.horizon();
    Grid3 q(H, mdp.num_states(), mdp.num_actions());
    StepTable next;
    for (int h = H - 1; h >= 0; --h) {
        StepTable cur = bellman_backup(mdp, slice(reward, h), policy, next, h);
        set_slice(q, h, cur);
        next = std::move(cur);
    }
    return QTable(std::move(q), r_max);
}

double policy_value(const TabularMdp& mdp, const Grid3& reward, const StagePolicy& policy) {
    check_policy_shape(mdp, policy);
    check_reward_shape(mdp, reward);
    const int H = mdp.horizon();
    StepTable next;
    for (int h = H - 1; h >= 0; --h)
        next = bellman_backup(mdp, slice(reward, h), policy, next, h);
    double v = 0.0;
    for (int a = 0; a < mdp.num_actions(); ++a)
        v += policy(0, mdp.initial_state(), a) * next(mdp.initial_state(), a);
    return v;
}

double mixture_value(const TabularMdp& mdp, const Grid3& reward, const MixturePolicy& mixture) {
    double acc = 0.0;
    for (const auto& c : mixture.components()) acc += policy_value(mdp, reward, c);
    return acc / static_cast<double>(mixture.size());
}

double value_of(const TabularMdp& mdp, const Grid3& reward, const PolicyChoice& policy) {
    if (const auto* sp = std::get_if<StagePolicy>(&policy))
        return policy_value(mdp, reward, *sp);
    return mixture_value(mdp, reward, std::get<MixturePolicy>(policy));
}

OptimalSolution exact_optimal(const TabularMdp& mdp, const Grid3& reward) {
    check_reward_shape(mdp, reward);
    const int H = mdp.horizon(), S = mdp.num_states(), A = mdp.num_actions();
    std::vector<std::vector<double>> values(static_cast<size_t>(H));
    Grid3 probs(H, S, A, 0.0);
    std::vector<double> v_next(static_cast<size_t>(S), 0.0);
    for (int h = H - 1; h >= 0; --h) {
        std::vector<double> v_cur(static_cast<size_t>(S), 0.0);
        for (int s = 0; s < S; ++s) {
            double best = 0.0;
            int best_a = 0;
            for (int a = 0; a < A; ++a) {
                double q = reward(h, s, a);
                if (h < H - 1) {
                    auto row = mdp.transition().row(h, s, a);
                    for (int sp = 0; sp < S; ++sp) q += row[sp] * v_next[static_cast<size_t>(sp)];
                }
                if (a == 0 || q > best) {  // strict >: ties keep the lowest index
                    best = q;
                    best_a = a;
                }
            }
            v_cur[static_cast<size_t>(s)] = best;
            probs(h, s, best_a) = 1.0;
        }
        values[static_cast<size_t>(h)] = v_cur;
        v_next = std::move(v_cur);
    }
    OptimalSolution sol{std::move(values), StagePolicy(std::move(probs)), 0.0};
    sol.value_at_start = sol.values[0][static_cast<size_t>(mdp.initial_state())];
    return sol;
}

VisitationMeasure visitation(const TabularMdp& mdp, const StagePolicy& policy) {
    check_policy_shape(mdp, policy);
    const int H = mdp.horizon(), S = mdp.num_states(), A = mdp.num_actions();
    Grid3 d(H, S, A, 0.0);
    std::vector<double> state_mass(static_cast<size_t>(S), 0.0);
    state_mass[static_cast<size_t>(mdp.initial_state())] = 1.0;
    for (int h = 0; h < H; ++h) {
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a)
                d(h, s, a) = state_mass[static_cast<size_t>(s)] * policy(h, s, a);
        if (h + 1 < H) {
            std::vector<double> next_mass(static_cast<size_t>(S), 0.0);
            for (int s = 0; s < S; ++s) {
                for (int a = 0; a < A; ++a) {
                    double m = d(h, s, a);
                    if (m == 0.0) continue;
                    auto row = mdp.transition().row(h, s, a);
                    for (int sp = 0; sp < S; ++sp) next_mass[static_cast<size_t>(sp)] += m * row[sp];
                }
            }
            state_mass = std::move(next_mass);
        }
    }
    return VisitationMeasure(std::move(d));
}

std::vector<std::vector<double>> state_values(const Grid3& q, const StagePolicy& policy) {
    std::vector<std::vector<double>> v(static_cast<size_t>(q.horizon()));
    for (int h = 0; h < q.horizon(); ++h) {
        v[static_cast<size_t>(h)].assign(static_cast<size_t>(q.num_states()), 0.0);
        for (int s = 0; s < q.num_states(); ++s) {
            double acc = 0.0;
            for (int a = 0; a < q.num_actions(); ++a) acc += policy(h, s, a) * q(h, s, a);
            v[static_cast<size_t>(h)][static_cast<size_t>(s)] = acc;
        }
    }
    return v;
}

}  // namespace dvcg
