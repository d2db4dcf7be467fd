#pragma once

#include <functional>
#include <string>
#include <vector>

#include "dvcg/dp.hpp"
#include "dvcg/mdp.hpp"
#include "dvcg/misreport.hpp"

namespace dvcg {

enum class Provenance { Exact, Learned };

/// A mechanism's decision: the implemented policy plus one price per agent.
struct MechanismOutcome {
    PolicyChoice policy;
    std::vector<double> prices;
    Provenance provenance = Provenance::Exact;
};

/// Clarke pivot price for agent i when the mechanism implements `chosen`:
/// V*_1(s0; R~_{-i}) - V^chosen_1(s0; R~_{-i}). Mixtures are priced with the
/// episode-level mixture value in the second term.
double vcg_price(const TabularMdp& mdp, const RewardProfile& reported,
                 const PolicyChoice& chosen, int agent);

/// The exact dynamic VCG mechanism on reported rewards: welfare-maximizing
/// policy (lowest-index tie-break) and Clarke pivot prices.
MechanismOutcome exact_vcg(const TabularMdp& mdp, const RewardProfile& reported);

/// V^pi_1(s0; r_i) - p_i.
double agent_utility(const TabularMdp& mdp, const Grid3& actual_reward_i,
                     const PolicyChoice& policy, double price);

/// V^pi_1(s0; r_0) + sum_i p_i.
double seller_utility(const TabularMdp& mdp, const Grid3& seller_reward,
                      const PolicyChoice& policy, const std::vector<double>& prices);

/// V*_1(s0; R) - V^pi_1(s0; R) on actual rewards.
double subopt_welfare(const TabularMdp& mdp, const RewardProfile& actual,
                      const PolicyChoice& policy);

/// Benchmark prices p_i* = V*(R_{-i}) - V^{pi*}(R_{-i}) under truthful
/// reports, with the same deterministic tie-break as exact_optimal.
std::vector<double> benchmark_prices(const TabularMdp& mdp, const RewardProfile& actual);

/// Agent i's utility under the exact truthful VCG benchmark minus their
/// utility under `outcome`.
double subopt_agent(const TabularMdp& mdp, const RewardProfile& actual, int agent,
                    const MechanismOutcome& outcome);

/// Benchmark seller utility minus outcome seller utility.
double subopt_seller(const TabularMdp& mdp, const RewardProfile& actual,
                     const MechanismOutcome& outcome);

using MechanismFn = std::function<MechanismOutcome(const RewardProfile& reported)>;

struct AgentDesiderata {
    int agent = 0;
    double truthful_utility = 0.0;
    double truthful_price = 0.0;
    double min_utility = 0.0;   // over deviations by other agents (and truthful reports)
    double max_gain = 0.0;      // best misreport gain for this agent
    long misreports_checked = 0;
};

struct DesiderataReport {
    double welfare_gap = 0.0;          // SubOpt of the truthful-outcome policy
    double min_agent_utility = 0.0;    // IR over the family
    double max_truthfulness_gain = 0.0;
    // Pivot-rule floor: min over every run and agent of the chosen policy's
    // value at that agent's reported reward minus the price charged. For the
    // exact mechanism this is nonnegative whatever anyone reports.
    double min_reported_value_minus_price = 0.0;
    std::vector<AgentDesiderata> per_agent;
    // Checks certify over the supplied finite family only; one-agent-at-a-time
    // deviations, others held truthful.
    std::string family_note;
};

/// Run a mechanism through the three desiderata against exact oracles.
/// Truthfulness: for each agent i and each misreport in family(i), compare
/// U_i(mechanism(misreport)) with U_i(mechanism(truthful)), others truthful.
/// IR: every truthful agent's utility under every such one-agent deviation.
DesiderataReport check_desiderata(const TabularMdp& mdp, const RewardProfile& actual,
                                  const MisreportFamily& family, const MechanismFn& mechanism);

}  // namespace dvcg
