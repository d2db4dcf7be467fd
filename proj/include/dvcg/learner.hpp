#pragma once

#include <cstdint>
#include <vector>

#include "dvcg/dataset.hpp"
#include "dvcg/mdp.hpp"

namespace dvcg {

enum class EvalMode { Opt, Pes };
enum class UnseenInit { BoxEdge, Zero };

struct OptimizerConfig {
    int max_iterations = 5000;
    double step_size = 0.0;    // 0 = auto: 1 / (2 * lambda * H * max mu_hat + 1)
    double tolerance = 1e-9;   // on objective decrease between accepted iterates
};

/// Configuration of one regularized evaluation problem.
struct EvalConfig {
    double lambda = 1.0;
    EvalMode mode = EvalMode::Pes;
    OptimizerConfig optimizer;
    UnseenInit unseen_init = UnseenInit::BoxEdge;

    void validate() const;
};

/// Soft policy iteration: T mirror-descent rounds with one evaluation
/// configuration per mode.
struct SpiConfig {
    int iterations = 1;   // T
    double eta = 0.0;     // mirror-descent step; 0 keeps policies fixed
    EvalConfig opt_eval;
    EvalConfig pes_eval;

    void validate() const;
};

struct VcgLearnConfig {
    EvalMode zeta1 = EvalMode::Pes;  // side used for G1 (the pivot optimum)
    EvalMode zeta2 = EvalMode::Opt;  // side used for G2 (the chosen policy)
    SpiConfig spi;
};

/// Per-cell sufficient statistics of a dataset: counts, per-agent reported
/// reward sums, and next-state histograms. Everything the tabular learner
/// needs; the raw tuples are not consulted again.
class DatasetIndex {
public:
    explicit DatasetIndex(const OfflineDataset& dataset);

    struct CellStats {
        long count = 0;
        std::vector<double> reward_sum;  // per agent
        std::vector<long> next_count;    // per next state
    };

    const MdpShape& shape() const { return shape_; }
    int num_agents() const { return n_; }
    double r_max() const { return r_max_; }
    long num_samples() const { return k_; }

    const CellStats& cell(int h, int s, int a) const { return cells_[flat(h, s, a)]; }
    double mu_hat(int h, int s, int a) const {
        return k_ == 0 ? 0.0 : static_cast<double>(cell(h, s, a).count) / static_cast<double>(k_);
    }
    double max_mu_hat() const { return max_mu_hat_; }

    /// Mean per-sample target reward at each cell for a selector. Entries with
    /// zero count are 0 and must be masked by the caller.
    StepTable mean_reward(const RewardProfile& reported, const RewardSelector& selector,
                          int h) const;

    size_t flat(int h, int s, int a) const {
        return (static_cast<size_t>(h) * shape_.num_states + s) * shape_.num_actions + a;
    }

private:
    MdpShape shape_;
    int n_ = 0;
    double r_max_ = 1.0;
    long k_ = 0;
    double max_mu_hat_ = 0.0;
    std::vector<CellStats> cells_;
};

/// The regularized evaluation objective
///   sigma * f_1(s0, pi_1) + lambda * sum_h E_h(f, pi; D)
/// with E_h computed through the closed-form weighted-residual identity.
/// Exposed so invariant checks can probe the objective directly.
class EvalObjective {
public:
    EvalObjective(const DatasetIndex& index, const RewardProfile& reported,
                  const RewardSelector& selector, const StagePolicy& policy,
                  const EvalConfig& cfg);

    double operator()(const Grid3& f) const;
    double bellman_penalty(const Grid3& f) const;  // sum_h E_h, no sign term
    void gradient(const Grid3& f, Grid3& grad) const;

    const std::vector<uint8_t>& seen() const { return seen_; }
    const MdpShape& shape() const { return shape_; }

private:
    double penalty_and_gradient(const Grid3& f, Grid3* grad) const;

    MdpShape shape_;
    double lambda_;
    double sign_;
    const StagePolicy& policy_;
    std::vector<double> mu_hat_;            // [h*S*A]
    std::vector<double> mean_target_;       // [h*S*A] mean reward per seen cell
    std::vector<std::vector<double>> next_; // [h*S*A] -> normalized next-state distribution
    std::vector<uint8_t> seen_;
};

struct EvalResult {
    QTable q;
    double value_at_start = 0.0;  // f_1(s0, pi_1)
    double objective = 0.0;
    bool converged = false;
    double final_grad_norm = 0.0;
    int iterations = 0;
    std::vector<uint8_t> seen;    // per (h, s, a)
};

/// Empirical squared Bellman loss L_{h,r}(f_h, f_next, pi; D). At the final
/// step the continuation term is zero.
double empirical_loss(const StepTable& f_h, const StepTable& f_next, const StagePolicy& policy,
                      const OfflineDataset& dataset, const RewardProfile& reported,
                      const RewardSelector& selector, int h);

struct BackupResult {
    StepTable g;                // clipped to the step-h box
    std::vector<uint8_t> seen;  // per (s, a)
};

/// Closed-form minimizer of L over the tabular class: the per-cell mean of
/// the sampled targets, clipped to the box; unseen cells take the configured
/// initialization.
BackupResult empirical_backup(const StepTable& f_next, const StagePolicy& policy,
                              const OfflineDataset& dataset, const RewardProfile& reported,
                              const RewardSelector& selector, int h, const EvalConfig& cfg);

/// E_{h,r}(f, pi; D) via the weighted-residual identity with the unclipped
/// per-cell means. Equals L(f_h, f_{h+1}) - min_g L(g, f_{h+1}).
double empirical_bellman_error(const QTable& f, const StagePolicy& policy,
                               const OfflineDataset& dataset, const RewardProfile& reported,
                               const RewardSelector& selector, int h);

/// Solve the regularized evaluation problem with projected gradient descent
/// (backtracking on the step, per-step box projection, unseen coordinates
/// frozen at their initialization).
EvalResult evaluate_policy(const DatasetIndex& index, const RewardProfile& reported,
                           const RewardSelector& selector, const StagePolicy& policy,
                           const EvalConfig& cfg, const Grid3* warm_start = nullptr);

EvalResult evaluate_policy(const OfflineDataset& dataset, const RewardProfile& reported,
                           const RewardSelector& selector, const StagePolicy& policy,
                           const EvalConfig& cfg);

/// Exponential-weights policy update: pi'(a|s) proportional to
/// pi(a|s) * exp(eta * q(h,s,a)), normalized per (h, s) with per-row max
/// subtraction.
StagePolicy mirror_descent_update(const StagePolicy& policy, const Grid3& q, double eta);

struct SpiModeOutput {
    MixturePolicy mixture;             // the T policy iterates, uniform weights
    std::vector<QTable> q_iterates;    // evaluation of each iterate
    std::vector<double> f1_trace;      // Q^(t)(s0, pi^(t)_1)
    double value_at_start = 0.0;       // mean of f1_trace; the output value estimate
    bool all_converged = true;
};

struct SpiOutput {
    SpiModeOutput optimistic;
    SpiModeOutput pessimistic;
};

/// Soft policy iteration. Both chains start uniform; iterate t is evaluated
/// and then updated, and the output mixes iterates 1..T (the initial uniform
/// policy included). The output value estimate averages the per-iterate
/// evaluations, which equals re-running the evaluator once per mixture
/// component.
SpiOutput soft_policy_iteration(const DatasetIndex& index, const RewardProfile& reported,
                                const RewardSelector& selector, const SpiConfig& cfg);

struct LearnDiagnostics {
    std::vector<double> g1;  // per agent
    std::vector<double> g2;  // per agent
    double welfare_value_estimate = 0.0;  // pessimistic estimate for the Total run
    bool any_nonconverged = false;
    std::vector<double> welfare_f1_trace;
};

struct LearnResult {
    std::vector<double> prices;
    MixturePolicy policy;
    LearnDiagnostics diagnostics;
};

/// The full offline mechanism learner: a pessimistic welfare run picks the
/// policy; per-agent pivot runs plus an evaluation of the chosen policy give
/// the prices p_i = G1_i - G2_i.
LearnResult offline_vcg_learn(const OfflineDataset& dataset, const RewardProfile& reported,
                              const VcgLearnConfig& cfg);

/// Reward table a selector denotes on a (true) profile; used when comparing
/// learned quantities against exact oracles.
Grid3 selector_reward_table(const RewardProfile& profile, const RewardSelector& selector);

struct LambdaEta {
    double lambda = 0.0;
    double eta = 0.0;
};

/// lambda = (r_max / (H^2 (eps_s + 3 eps_f)^2))^(1/3),
/// eta = sqrt(log A / (2 H^2 r_max^2 T)).
LambdaEta compute_lambda_eta(double r_max, int horizon, int num_actions, int iterations,
                             double eps_s, double eps_f);

/// One-sided statistical width of the good event:
/// (5136 / K) H^4 r_max^4 (log(56 n H / delta) + 2 log_cov_f + log_cov_pi).
double epsilon_s(long k, double delta, int num_agents, int horizon, double r_max,
                 double log_cov_f, double log_cov_pi);

/// Covering radii the good event is evaluated at.
inline double f_covering_radius(long k, int horizon, double r_max) {
    double hr = horizon * r_max;
    return 19.0 * hr * hr * hr / static_cast<double>(k);
}
inline double pi_covering_radius(long k, int horizon, double r_max) {
    double hr = horizon * r_max;
    return 19.0 * hr * hr * hr * hr / static_cast<double>(k);
}

struct CoveringLogBounds {
    double log_cov_f = 0.0;   // log N_inf(radius, tabular F)
    double log_cov_pi = 0.0;  // log N_{inf,1}(radius, SPI policy class)
};

/// Uniform-grid covering of the boxed tabular class, and a softmax-Lipschitz
/// bound for the policy class induced by T mirror-descent rounds at step eta.
CoveringLogBounds covering_log_bounds(int num_states, int num_actions, int horizon,
                                      int iterations, double eta, double r_max, double radius);

}  // namespace dvcg
