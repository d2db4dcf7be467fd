#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "dvcg/mdp.hpp"

namespace dvcg {

/// One logged interaction at step h: the sampled state-action, the reported
/// reward of every agent evaluated there, and the sampled next state.
struct Transition {
    int state = 0;
    int action = 0;
    std::vector<double> reported;  // one entry per agent
    int next_state = 0;
};

struct DatasetProvenance {
    uint64_t seed = 0;
    std::string mu_source;       // "uniform", "explicit", "behavior", ...
    double noise_magnitude = 0;  // additive reward noise half-width; 0 = noiseless
};

/// K per-step samples for each h, drawn i.i.d. from mu_h. Steps are not
/// chained into trajectories; K counts samples per step.
class OfflineDataset {
public:
    OfflineDataset(MdpShape shape, int num_agents, double r_max, long k,
                   std::vector<std::vector<Transition>> tuples, DatasetProvenance provenance);

    const MdpShape& shape() const { return shape_; }
    int num_agents() const { return n_; }
    double r_max() const { return r_max_; }
    long num_samples() const { return k_; }
    const DatasetProvenance& provenance() const { return provenance_; }

    const std::vector<Transition>& step(int h) const { return tuples_[static_cast<size_t>(h)]; }

private:
    MdpShape shape_;
    int n_;
    double r_max_;
    long k_;
    std::vector<std::vector<Transition>> tuples_;  // [h][tau]
    DatasetProvenance provenance_;
};

/// Which reported-reward aggregate a learning problem targets.
/// Total:        r0 + sum_i r~_i                  (the welfare problem)
/// Exclude(i):   r0 + sum_{j != i} r~_j           (the pivot problem)
/// SinglePlus(i): r0 + sum_{j != i} r~_j + r_i     with agent i's reported
///               values replaced by the supplied actual table.
class RewardSelector {
public:
    enum class Kind { Total, Exclude, SinglePlus };

    static RewardSelector total() { return RewardSelector(Kind::Total, -1, {}); }
    static RewardSelector exclude(int agent) { return RewardSelector(Kind::Exclude, agent, {}); }
    static RewardSelector single_plus(int agent, Grid3 actual_reward) {
        return RewardSelector(Kind::SinglePlus, agent, std::move(actual_reward));
    }

    Kind kind() const { return kind_; }
    int agent() const { return agent_; }
    const Grid3& actual_reward() const { return actual_; }

    void validate(int num_agents) const;

private:
    RewardSelector(Kind k, int agent, Grid3 actual)
        : kind_(k), agent_(agent), actual_(std::move(actual)) {}

    Kind kind_;
    int agent_;
    Grid3 actual_;  // used by SinglePlus only
};

/// Draw (s,a) ~ mu_h and s' ~ P_h(.|s,a) independently for every (h, tau),
/// recording the reported rewards at the sampled cell. The stream for each
/// (h, tau) derives from (seed, h, tau), so output is independent of
/// generation order, and a length-K dataset is a prefix of a length-K'
/// dataset for K' > K under the same seed.
OfflineDataset sample_dataset(const TabularMdp& mdp, const RewardProfile& reported,
                              const DataDistribution& dist, long k, uint64_t seed,
                              double noise_magnitude = 0.0);

/// Per-sample scalar targets r_h^tau: seller term from the profile plus the
/// selected agents' recorded reports. Returns [h][tau].
std::vector<std::vector<double>> aggregate_rewards(const OfflineDataset& dataset,
                                                   const RewardProfile& reported,
                                                   const RewardSelector& selector);

/// Empirical counterpart of mu: counts per (h, s, a) divided by K.
VisitationMeasure empirical_visitation(const OfflineDataset& dataset);

void save_dataset(const OfflineDataset& dataset, const std::filesystem::path& path);
OfflineDataset load_dataset(const std::filesystem::path& path);

}  // namespace dvcg
