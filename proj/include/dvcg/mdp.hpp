#pragma once

#include <string>
#include <vector>

#include "dvcg/tables.hpp"

namespace dvcg {

inline constexpr double kRowSumTol = 1e-12;
inline constexpr double kMeasureSumTol = 1e-10;

/// Dimensions of an MDP plus the fixed initial state. The learner sees only
/// this, never the transition kernel.
struct MdpShape {
    int num_states = 0;
    int num_actions = 0;
    int horizon = 0;
    int initial_state = 0;

    bool operator==(const MdpShape&) const = default;
};

/// Finite episodic MDP with horizon-indexed transitions and a fixed start
/// state. Steps are 0-based internally: h ranges over [0, H).
class TabularMdp {
public:
    TabularMdp(int num_states, int num_actions, int horizon,
               TransitionTable transition, int initial_state);

    int num_states() const { return S_; }
    int num_actions() const { return A_; }
    int horizon() const { return H_; }
    int initial_state() const { return s0_; }
    const TransitionTable& transition() const { return P_; }

    MdpShape shape() const { return {S_, A_, H_, s0_}; }

private:
    int S_, A_, H_, s0_;
    TransitionTable P_;
};

/// Per-step stochastic policy: probs[h][s] is a distribution over actions.
class StagePolicy {
public:
    StagePolicy(Grid3 probs);

    /// Uniform policy for the given shape.
    static StagePolicy uniform(const MdpShape& shape);

    double operator()(int h, int s, int a) const { return probs_(h, s, a); }
    const Grid3& probs() const { return probs_; }

    int horizon() const { return probs_.horizon(); }
    int num_states() const { return probs_.num_states(); }
    int num_actions() const { return probs_.num_actions(); }

private:
    Grid3 probs_;
};

/// Uniform mixture of stage policies: one component is drawn at the start of
/// each episode and followed throughout. Never a per-step average.
class MixturePolicy {
public:
    explicit MixturePolicy(std::vector<StagePolicy> components);

    const std::vector<StagePolicy>& components() const { return components_; }
    size_t size() const { return components_.size(); }

private:
    std::vector<StagePolicy> components_;
};

/// Action-value table confined to the per-step boxes
/// |q[h][s][a]| <= (H - h) * r_max  (0-based h).
class QTable {
public:
    QTable(Grid3 values, double r_max);

    double operator()(int h, int s, int a) const { return values_(h, s, a); }
    const Grid3& values() const { return values_; }
    double r_max() const { return r_max_; }

    /// Half-width of the box at step h (0-based).
    static double box_halfwidth(int h, int horizon, double r_max) {
        return static_cast<double>(horizon - h) * r_max;
    }

private:
    Grid3 values_;
    double r_max_;
};

/// State-action visitation measure; each step's entries sum to 1.
class VisitationMeasure {
public:
    explicit VisitationMeasure(Grid3 d);

    double operator()(int h, int s, int a) const { return d_(h, s, a); }
    const Grid3& table() const { return d_; }

private:
    Grid3 d_;
};

enum class RewardRole { Actual, Reported };

/// Seller reward plus n per-agent reward tables. Agent rewards live in
/// [0, 1]; the seller's in [-r_max, r_max - n], so the pointwise total stays
/// in [-r_max, r_max].
class RewardProfile {
public:
    RewardProfile(double r_max, Grid3 seller_reward, std::vector<Grid3> agent_rewards,
                  RewardRole role);

    int num_agents() const { return static_cast<int>(agents_.size()); }
    double r_max() const { return r_max_; }
    RewardRole role() const { return role_; }

    const Grid3& seller() const { return seller_; }
    const Grid3& agent(int i) const;

    /// R = r0 + sum_i r_i.
    Grid3 total() const;
    /// R_{-i} = r0 + sum_{j != i} r_j.
    Grid3 excluding(int i) const;

    /// Copy with agent i's table replaced (used to apply misreports).
    RewardProfile with_agent(int i, Grid3 reward, RewardRole role) const;

    int horizon() const { return seller_.horizon(); }
    int num_states() const { return seller_.num_states(); }
    int num_actions() const { return seller_.num_actions(); }

private:
    double r_max_;
    Grid3 seller_;
    std::vector<Grid3> agents_;
    RewardRole role_;
};

/// Data-collection distribution: one simplex over (s, a) per step.
class DataDistribution {
public:
    explicit DataDistribution(Grid3 mu);

    static DataDistribution uniform(const MdpShape& shape);

    double operator()(int h, int s, int a) const { return mu_(h, s, a); }
    const Grid3& table() const { return mu_; }

private:
    Grid3 mu_;
};

namespace detail {
void check_shape_match(const Grid3& a, const Grid3& b, const std::string& what);
void check_probability_rows(const Grid3& probs, const std::string& what);
}  // namespace detail

}  // namespace dvcg
