#include "dvcg/mechanism.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "dvcg/rng.hpp"

namespace dvcg {

double vcg_price(const TabularMdp& mdp, const RewardProfile& reported,
                 const PolicyChoice& chosen, int agent) {
    if (agent < 0 || agent >= reported.num_agents())
        throw std::invalid_argument("vcg_price: agent index out of range");
    Grid3 r_minus = reported.excluding(agent);
    double v_star = exact_optimal(mdp, r_minus).value_at_start;
    double v_chosen = value_of(mdp, r_minus, chosen);
    return v_star - v_chosen;
}

MechanismOutcome exact_vcg(const TabularMdp& mdp, const RewardProfile& reported) {
    OptimalSolution sol = exact_optimal(mdp, reported.total());
    PolicyChoice chosen = sol.policy;
    std::vector<double> prices(static_cast<size_t>(reported.num_agents()), 0.0);
    for (int i = 0; i < reported.num_agents(); ++i)
        prices[static_cast<size_t>(i)] = vcg_price(mdp, reported, chosen, i);
    return MechanismOutcome{std::move(chosen), std::move(prices), Provenance::Exact};
}

double agent_utility(const TabularMdp& mdp, const Grid3& actual_reward_i,
                     const PolicyChoice& policy, double price) {
    return value_of(mdp, actual_reward_i, policy) - price;
}

double seller_utility(const TabularMdp& mdp, const Grid3& seller_reward,
                      const PolicyChoice& policy, const std::vector<double>& prices) {
    double v = value_of(mdp, seller_reward, policy);
    for (double p : prices) v += p;
    return v;
}

double subopt_welfare(const TabularMdp& mdp, const RewardProfile& actual,
                      const PolicyChoice& policy) {
    Grid3 total = actual.total();
    return exact_optimal(mdp, total).value_at_start - value_of(mdp, total, policy);
}

std::vector<double> benchmark_prices(const TabularMdp& mdp, const RewardProfile& actual) {
    PolicyChoice pi_star = exact_optimal(mdp, actual.total()).policy;
    std::vector<double> prices(static_cast<size_t>(actual.num_agents()), 0.0);
    for (int i = 0; i < actual.num_agents(); ++i)
        prices[static_cast<size_t>(i)] = vcg_price(mdp, actual, pi_star, i);
    return prices;
}

double subopt_agent(const TabularMdp& mdp, const RewardProfile& actual, int agent,
                    const MechanismOutcome& outcome) {
    if (agent < 0 || agent >= actual.num_agents())
        throw std::invalid_argument("subopt_agent: agent index out of range");
    if (outcome.prices.size() != static_cast<size_t>(actual.num_agents()))
        throw std::invalid_argument("subopt_agent: price vector has wrong length");
    PolicyChoice pi_star = exact_optimal(mdp, actual.total()).policy;
    double p_star = vcg_price(mdp, actual, pi_star, agent);
    double u_star = agent_utility(mdp, actual.agent(agent), pi_star, p_star);
    double u = agent_utility(mdp, actual.agent(agent), outcome.policy,
                             outcome.prices[static_cast<size_t>(agent)]);
    return u_star - u;
}

double subopt_seller(const TabularMdp& mdp, const RewardProfile& actual,
                     const MechanismOutcome& outcome) {
    if (outcome.prices.size() != static_cast<size_t>(actual.num_agents()))
        throw std::invalid_argument("subopt_seller: price vector has wrong length");
    PolicyChoice pi_star = exact_optimal(mdp, actual.total()).policy;
    double u_star = seller_utility(mdp, actual.seller(), pi_star, benchmark_prices(mdp, actual));
    double u = seller_utility(mdp, actual.seller(), outcome.policy, outcome.prices);
    return u_star - u;
}

std::vector<Grid3> enumerate_misreports(const MisreportFamily& family, const Grid3& truthful) {
    std::vector<Grid3> out;
    switch (family.kind) {
        case MisreportFamily::Kind::Grid: {
            if (family.grid_levels < 2)
                throw std::invalid_argument("MisreportFamily: grid needs at least 2 levels");
            const long total_cells = static_cast<long>(truthful.data().size());
            long vary = 0;
            long profiles = 1;
            while (vary < total_cells && profiles * family.grid_levels <= family.max_profiles) {
                profiles *= family.grid_levels;
                ++vary;
            }
            out.reserve(static_cast<size_t>(profiles));
            std::vector<int> odometer(static_cast<size_t>(vary), 0);
            const double step = 1.0 / (family.grid_levels - 1);
            for (long p = 0; p < profiles; ++p) {
                Grid3 g = truthful;
                for (long c = 0; c < vary; ++c)
                    g.data()[static_cast<size_t>(c)] = odometer[static_cast<size_t>(c)] * step;
                out.push_back(std::move(g));
                for (long c = 0; c < vary; ++c) {
                    if (++odometer[static_cast<size_t>(c)] < family.grid_levels) break;
                    odometer[static_cast<size_t>(c)] = 0;
                }
            }
            break;
        }
        case MisreportFamily::Kind::Cloud: {
            out.reserve(static_cast<size_t>(family.cloud_count));
            Rng rng = Rng::derive(family.cloud_seed, {0x6d697372ULL});  // stream tag
            for (int k = 0; k < family.cloud_count; ++k) {
                Grid3 g = truthful;
                for (double& v : g.data()) {
                    v += rng.uniform(-family.cloud_magnitude, family.cloud_magnitude);
                    v = std::clamp(v, 0.0, 1.0);
                }
                out.push_back(std::move(g));
            }
            break;
        }
        case MisreportFamily::Kind::Scale: {
            out.reserve(family.scale_levels.size());
            for (double alpha : family.scale_levels) {
                Grid3 g = truthful;
                for (double& v : g.data()) v = std::clamp(alpha * v, 0.0, 1.0);
                out.push_back(std::move(g));
            }
            break;
        }
    }
    return out;
}

DesiderataReport check_desiderata(const TabularMdp& mdp, const RewardProfile& actual,
                                  const MisreportFamily& family, const MechanismFn& mechanism) {
    const int n = actual.num_agents();
    DesiderataReport report;
    report.family_note =
        "certified over the supplied misreport family with one deviating agent at a time";
    report.per_agent.resize(static_cast<size_t>(n));

    MechanismOutcome truthful = mechanism(actual);
    report.welfare_gap = subopt_welfare(mdp, actual, truthful.policy);

    double reported_floor = std::numeric_limits<double>::infinity();
    auto track_reported_floor = [&](const RewardProfile& reported,
                                    const MechanismOutcome& outcome) {
        for (int i = 0; i < n; ++i)
            reported_floor = std::min(
                reported_floor, agent_utility(mdp, reported.agent(i), outcome.policy,
                                              outcome.prices[static_cast<size_t>(i)]));
    };
    track_reported_floor(actual, truthful);

    std::vector<double> truthful_utilities(static_cast<size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        auto& row = report.per_agent[static_cast<size_t>(i)];
        row.agent = i;
        row.truthful_price = truthful.prices[static_cast<size_t>(i)];
        row.truthful_utility =
            agent_utility(mdp, actual.agent(i), truthful.policy, row.truthful_price);
        truthful_utilities[static_cast<size_t>(i)] = row.truthful_utility;
        row.min_utility = row.truthful_utility;
        row.max_gain = -std::numeric_limits<double>::infinity();
    }

    for (int j = 0; j < n; ++j) {
        auto misreports = enumerate_misreports(family, actual.agent(j));
        auto& row_j = report.per_agent[static_cast<size_t>(j)];
        row_j.misreports_checked = static_cast<long>(misreports.size());
        for (auto& rj : misreports) {
            RewardProfile deviated = actual.with_agent(j, rj, RewardRole::Reported);
            MechanismOutcome outcome = mechanism(deviated);
            track_reported_floor(deviated, outcome);
            double u_j = agent_utility(mdp, actual.agent(j), outcome.policy,
                                       outcome.prices[static_cast<size_t>(j)]);
            row_j.max_gain =
                std::max(row_j.max_gain, u_j - truthful_utilities[static_cast<size_t>(j)]);
            // Everyone except j reported truthfully in this run; IR applies to them.
            for (int i = 0; i < n; ++i) {
                if (i == j) continue;
                double u_i = agent_utility(mdp, actual.agent(i), outcome.policy,
                                           outcome.prices[static_cast<size_t>(i)]);
                auto& row_i = report.per_agent[static_cast<size_t>(i)];
                row_i.min_utility = std::min(row_i.min_utility, u_i);
            }
        }
    }

    for (auto& row : report.per_agent)
        if (row.misreports_checked == 0) row.max_gain = 0.0;  // empty family: no gain possible

    report.min_reported_value_minus_price = reported_floor;
    report.min_agent_utility = report.per_agent.front().min_utility;
    report.max_truthfulness_gain = report.per_agent.front().max_gain;
    for (const auto& row : report.per_agent) {
        report.min_agent_utility = std::min(report.min_agent_utility, row.min_utility);
        report.max_truthfulness_gain = std::max(report.max_truthfulness_gain, row.max_gain);
    }
    return report;
}

}  // namespace dvcg
