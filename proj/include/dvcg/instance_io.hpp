#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "dvcg/mdp.hpp"

namespace dvcg {

/// An environment plus the agents' actual rewards: everything an experiment
/// needs to define oracles and generate data.
struct Instance {
    std::string name;
    TabularMdp mdp;
    RewardProfile actual;
};

/// Two-state, two-action, two-step chain: action 0 stays, action 1 swaps,
/// deterministically at both steps. One agent rewarded in state 1.
Instance make_m2_n1();

/// Same dynamics, two agents with opposing interests (state 1 vs state 0) and
/// constant total welfare; exercises externality pricing.
Instance make_m2_n2();

struct RandomInstanceSpec {
    int num_states = 2;
    int num_actions = 2;
    int horizon = 2;
    int num_agents = 1;
    double r_max = 0.0;  // <= 0: use max(1, num_agents)
    uint64_t seed = 0;
};

/// Dense random instance: Dirichlet(1) transition rows, uniform agent rewards
/// in [0, 1], uniform seller rewards in the admissible band.
Instance random_instance(const RandomInstanceSpec& spec);

class Rng;

/// Stochastic policy with Dirichlet(1) rows.
StagePolicy random_policy(const MdpShape& shape, Rng& rng);

/// Q table drawn uniformly inside the per-step boxes.
Grid3 random_boxed_q(const MdpShape& shape, double r_max, Rng& rng);

void save_instance(const Instance& instance, const std::filesystem::path& path);
Instance load_instance(const std::filesystem::path& path);

}  // namespace dvcg
