#pragma once

#include <variant>
#include <vector>

#include "dvcg/mdp.hpp"

namespace dvcg {

/// A mechanism may implement either a single stage policy or an
/// episode-level mixture.
using PolicyChoice = std::variant<StagePolicy, MixturePolicy>;

/// One application of the policy-specific Bellman evaluation operator at step
/// h: r_h(s,a) + sum_{s'} P_h(s'|s,a) E_{a' ~ pi_{h+1}}[f_next(s',a')].
/// At the final step pass an empty f_next; the continuation term is 0.
StepTable bellman_backup(const TabularMdp& mdp, const StepTable& reward_h,
                         const StagePolicy& policy, const StepTable& f_next, int h);

/// Exact Q^pi by backward induction.
QTable exact_policy_q(const TabularMdp& mdp, const Grid3& reward,
                      const StagePolicy& policy, double r_max);

/// V^pi_1(s0): expectation of Q^pi under the first-step policy row.
double policy_value(const TabularMdp& mdp, const Grid3& reward, const StagePolicy& policy);

/// Exact value of an episode-level mixture: the mean of component values.
double mixture_value(const TabularMdp& mdp, const Grid3& reward, const MixturePolicy& mixture);

/// Value of whichever policy form a mechanism chose.
double value_of(const TabularMdp& mdp, const Grid3& reward, const PolicyChoice& policy);

struct OptimalSolution {
    std::vector<std::vector<double>> values;  // [h][s], optimal state values
    StagePolicy policy;                       // deterministic, lowest-index tie-break
    double value_at_start = 0.0;              // values[0][s0]
};

/// Backward-induction value iteration. Ties in the argmax go to the
/// lowest-index action so that prices built on top are reproducible.
OptimalSolution exact_optimal(const TabularMdp& mdp, const Grid3& reward);

/// Forward state-action occupancy from the point mass at s0.
VisitationMeasure visitation(const TabularMdp& mdp, const StagePolicy& policy);

/// Per-step state values V^pi_h(s) for a given Q table interpretation
/// (E_{a ~ pi_h(.|s)}[q(h, s, a)]).
std::vector<std::vector<double>> state_values(const Grid3& q, const StagePolicy& policy);

}  // namespace dvcg
