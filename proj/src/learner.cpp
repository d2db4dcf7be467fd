#include "dvcg/learner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace dvcg {

namespace {

void check_policy_shape(const MdpShape& shape, const StagePolicy& policy, const char* what) {
    if (policy.horizon() != shape.horizon || policy.num_states() != shape.num_states ||
        policy.num_actions() != shape.num_actions)
        throw std::invalid_argument(std::string(what) + ": policy shape mismatch");
}

double box_halfwidth(int h, const MdpShape& shape, double r_max) {
    return QTable::box_halfwidth(h, shape.horizon, r_max);
}

double unseen_value(int h, const MdpShape& shape, double r_max, const EvalConfig& cfg) {
    if (cfg.unseen_init == UnseenInit::Zero) return 0.0;
    double edge = box_halfwidth(h, shape, r_max);
    return cfg.mode == EvalMode::Pes ? -edge : edge;
}

}  // namespace

void EvalConfig::validate() const {
    if (lambda <= 0.0) throw std::invalid_argument("EvalConfig: lambda must be positive");
    if (optimizer.max_iterations < 1)
        throw std::invalid_argument("EvalConfig: max_iterations must be at least 1");
    if (optimizer.tolerance <= 0.0)
        throw std::invalid_argument("EvalConfig: tolerance must be positive");
    if (optimizer.step_size < 0.0)
        throw std::invalid_argument("EvalConfig: step_size must be nonnegative");
}

void SpiConfig::validate() const {
    if (iterations < 1) throw std::invalid_argument("SpiConfig: iterations must be at least 1");
    if (eta < 0.0) throw std::invalid_argument("SpiConfig: eta must be nonnegative");
    opt_eval.validate();
    pes_eval.validate();
}

DatasetIndex::DatasetIndex(const OfflineDataset& dataset)
    : shape_(dataset.shape()), n_(dataset.num_agents()), r_max_(dataset.r_max()),
      k_(dataset.num_samples()) {
    cells_.resize(static_cast<size_t>(shape_.horizon) * shape_.num_states * shape_.num_actions);
    for (auto& c : cells_) {
        c.reward_sum.assign(static_cast<size_t>(n_), 0.0);
        c.next_count.assign(static_cast<size_t>(shape_.num_states), 0);
    }
    for (int h = 0; h < shape_.horizon; ++h) {
        for (const Transition& t : dataset.step(h)) {
            CellStats& c = cells_[flat(h, t.state, t.action)];
            ++c.count;
            for (int i = 0; i < n_; ++i)
                c.reward_sum[static_cast<size_t>(i)] += t.reported[static_cast<size_t>(i)];
            ++c.next_count[static_cast<size_t>(t.next_state)];
        }
    }
    for (const auto& c : cells_)
        if (k_ > 0)
            max_mu_hat_ =
                std::max(max_mu_hat_, static_cast<double>(c.count) / static_cast<double>(k_));
}

StepTable DatasetIndex::mean_reward(const RewardProfile& reported,
                                    const RewardSelector& selector, int h) const {
    selector.validate(n_);
    StepTable out(shape_.num_states, shape_.num_actions, 0.0);
    for (int s = 0; s < shape_.num_states; ++s) {
        for (int a = 0; a < shape_.num_actions; ++a) {
            const CellStats& c = cell(h, s, a);
            if (c.count == 0) continue;
            double r = reported.seller()(h, s, a);
            for (int i = 0; i < n_; ++i) {
                if (selector.kind() != RewardSelector::Kind::Total && i == selector.agent())
                    continue;
                r += c.reward_sum[static_cast<size_t>(i)] / static_cast<double>(c.count);
            }
            if (selector.kind() == RewardSelector::Kind::SinglePlus)
                r += selector.actual_reward()(h, s, a);
            out(s, a) = r;
        }
    }
    return out;
}

EvalObjective::EvalObjective(const DatasetIndex& index, const RewardProfile& reported,
                             const RewardSelector& selector, const StagePolicy& policy,
                             const EvalConfig& cfg)
    : shape_(index.shape()), lambda_(cfg.lambda),
      sign_(cfg.mode == EvalMode::Pes ? 1.0 : -1.0), policy_(policy) {
    check_policy_shape(shape_, policy, "EvalObjective");
    const int S = shape_.num_states, A = shape_.num_actions, H = shape_.horizon;
    const size_t cells = static_cast<size_t>(H) * S * A;
    mu_hat_.assign(cells, 0.0);
    mean_target_.assign(cells, 0.0);
    next_.assign(cells, {});
    seen_.assign(cells, 0);
    for (int h = 0; h < H; ++h) {
        StepTable r_bar = index.mean_reward(reported, selector, h);
        for (int s = 0; s < S; ++s) {
            for (int a = 0; a < A; ++a) {
                const auto& c = index.cell(h, s, a);
                if (c.count == 0) continue;
                size_t k = index.flat(h, s, a);
                seen_[k] = 1;
                mu_hat_[k] = index.mu_hat(h, s, a);
                mean_target_[k] = r_bar(s, a);
                auto& nd = next_[k];
                nd.assign(static_cast<size_t>(S), 0.0);
                for (int sp = 0; sp < S; ++sp)
                    nd[static_cast<size_t>(sp)] =
                        static_cast<double>(c.next_count[static_cast<size_t>(sp)]) /
                        static_cast<double>(c.count);
            }
        }
    }
}

double EvalObjective::penalty_and_gradient(const Grid3& f, Grid3* grad) const {
    const int S = shape_.num_states, A = shape_.num_actions, H = shape_.horizon;
    // V[h][s] = E_{a ~ pi_h}[f_h(s, a)], consumed one step earlier.
    std::vector<std::vector<double>> v(static_cast<size_t>(H));
    for (int h = 1; h < H; ++h) {
        auto& vh = v[static_cast<size_t>(h)];
        vh.assign(static_cast<size_t>(S), 0.0);
        for (int s = 0; s < S; ++s) {
            double acc = 0.0;
            for (int a = 0; a < A; ++a) acc += policy_(h, s, a) * f(h, s, a);
            vh[static_cast<size_t>(s)] = acc;
        }
    }
    double penalty = 0.0;
    for (int h = 0; h < H; ++h) {
        for (int s = 0; s < S; ++s) {
            for (int a = 0; a < A; ++a) {
                size_t k = f.idx(h, s, a);
                if (!seen_[k]) continue;
                double g = mean_target_[k];
                if (h + 1 < H) {
                    const auto& nd = next_[k];
                    const auto& vn = v[static_cast<size_t>(h + 1)];
                    for (int sp = 0; sp < S; ++sp)
                        g += nd[static_cast<size_t>(sp)] * vn[static_cast<size_t>(sp)];
                }
                double resid = f(h, s, a) - g;
                penalty += mu_hat_[k] * resid * resid;
                if (grad != nullptr) {
                    double d = 2.0 * lambda_ * mu_hat_[k] * resid;
                    (*grad)(h, s, a) += d;
                    if (h + 1 < H) {
                        const auto& nd = next_[k];
                        for (int sp = 0; sp < S; ++sp) {
                            double w = d * nd[static_cast<size_t>(sp)];
                            if (w == 0.0) continue;
                            for (int ap = 0; ap < A; ++ap)
                                (*grad)(h + 1, sp, ap) -= w * policy_(h + 1, sp, ap);
                        }
                    }
                }
            }
        }
    }
    return penalty;
}

double EvalObjective::operator()(const Grid3& f) const {
    double head = 0.0;
    for (int a = 0; a < shape_.num_actions; ++a)
        head += policy_(0, shape_.initial_state, a) * f(0, shape_.initial_state, a);
    return sign_ * head + lambda_ * penalty_and_gradient(f, nullptr);
}

double EvalObjective::bellman_penalty(const Grid3& f) const {
    return penalty_and_gradient(f, nullptr);
}

void EvalObjective::gradient(const Grid3& f, Grid3& grad) const {
    std::fill(grad.data().begin(), grad.data().end(), 0.0);
    for (int a = 0; a < shape_.num_actions; ++a)
        grad(0, shape_.initial_state, a) += sign_ * policy_(0, shape_.initial_state, a);
    penalty_and_gradient(f, &grad);
}

double empirical_loss(const StepTable& f_h, const StepTable& f_next, const StagePolicy& policy,
                      const OfflineDataset& dataset, const RewardProfile& reported,
                      const RewardSelector& selector, int h) {
    if (dataset.num_samples() == 0)
        throw std::invalid_argument("empirical_loss: dataset is empty");
    const MdpShape& shape = dataset.shape();
    if (h < 0 || h >= shape.horizon)
        throw std::invalid_argument("empirical_loss: step index out of range");
    auto targets = aggregate_rewards(dataset, reported, selector);
    const auto& row = dataset.step(h);
    const bool terminal = (h == shape.horizon - 1);
    double acc = 0.0;
    for (size_t tau = 0; tau < row.size(); ++tau) {
        const Transition& t = row[tau];
        double y = targets[static_cast<size_t>(h)][tau];
        if (!terminal)
            for (int ap = 0; ap < shape.num_actions; ++ap)
                y += policy(h + 1, t.next_state, ap) * f_next(t.next_state, ap);
        double resid = f_h(t.state, t.action) - y;
        acc += resid * resid;
    }
    return acc / static_cast<double>(dataset.num_samples());
}

namespace {

// Per-cell mean of the sampled targets r + E_pi[f_next(s', .)], unclipped.
// Cells with no data stay 0 and are reported unseen.
StepTable cell_mean_targets(const DatasetIndex& index, const StepTable& r_bar,
                            const StagePolicy& policy, const Grid3* f, int h,
                            std::vector<uint8_t>* seen_out) {
    const MdpShape& shape = index.shape();
    const int S = shape.num_states, A = shape.num_actions;
    const bool terminal = (h == shape.horizon - 1);
    StepTable out(S, A, 0.0);
    if (seen_out != nullptr) seen_out->assign(static_cast<size_t>(S) * A, 0);
    for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) {
            const auto& c = index.cell(h, s, a);
            if (c.count == 0) continue;
            if (seen_out != nullptr) (*seen_out)[static_cast<size_t>(s) * A + a] = 1;
            double g = r_bar(s, a);
            if (!terminal && f != nullptr) {
                for (int sp = 0; sp < S; ++sp) {
                    double w = static_cast<double>(c.next_count[static_cast<size_t>(sp)]) /
                               static_cast<double>(c.count);
                    if (w == 0.0) continue;
                    double v = 0.0;
                    for (int ap = 0; ap < A; ++ap) v += policy(h + 1, sp, ap) * (*f)(h + 1, sp, ap);
                    g += w * v;
                }
            }
            out(s, a) = g;
        }
    }
    return out;
}

}  // namespace

BackupResult empirical_backup(const StepTable& f_next, const StagePolicy& policy,
                              const OfflineDataset& dataset, const RewardProfile& reported,
                              const RewardSelector& selector, int h, const EvalConfig& cfg) {
    const MdpShape& shape = dataset.shape();
    if (h < 0 || h >= shape.horizon)
        throw std::invalid_argument("empirical_backup: step index out of range");
    DatasetIndex index(dataset);
    const int S = shape.num_states, A = shape.num_actions;
    // Lift f_next into a full grid so the shared target helper applies.
    Grid3 lifted(shape.horizon, S, A, 0.0);
    if (h + 1 < shape.horizon)
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a) lifted(h + 1, s, a) = f_next(s, a);
    StepTable r_bar = index.mean_reward(reported, selector, h);
    BackupResult out;
    out.g = cell_mean_targets(index, r_bar, policy, &lifted, h, &out.seen);
    const double edge = box_halfwidth(h, shape, dataset.r_max());
    for (int s = 0; s < S; ++s)
        for (int a = 0; a < A; ++a) {
            size_t k = static_cast<size_t>(s) * A + a;
            if (out.seen[k])
                out.g(s, a) = std::clamp(out.g(s, a), -edge, edge);
            else
                out.g(s, a) = unseen_value(h, shape, dataset.r_max(), cfg);
        }
    return out;
}

double empirical_bellman_error(const QTable& f, const StagePolicy& policy,
                               const OfflineDataset& dataset, const RewardProfile& reported,
                               const RewardSelector& selector, int h) {
    const MdpShape& shape = dataset.shape();
    if (h < 0 || h >= shape.horizon)
        throw std::invalid_argument("empirical_bellman_error: step index out of range");
    DatasetIndex index(dataset);
    StepTable r_bar = index.mean_reward(reported, selector, h);
    StepTable g = cell_mean_targets(index, r_bar, policy, &f.values(), h, nullptr);
    double acc = 0.0;
    for (int s = 0; s < shape.num_states; ++s)
        for (int a = 0; a < shape.num_actions; ++a) {
            if (index.cell(h, s, a).count == 0) continue;
            double resid = f(h, s, a) - g(s, a);
            acc += index.mu_hat(h, s, a) * resid * resid;
        }
    return acc;
}

EvalResult evaluate_policy(const DatasetIndex& index, const RewardProfile& reported,
                           const RewardSelector& selector, const StagePolicy& policy,
                           const EvalConfig& cfg, const Grid3* warm_start) {
    cfg.validate();
    selector.validate(index.num_agents());
    const MdpShape& shape = index.shape();
    check_policy_shape(shape, policy, "evaluate_policy");
    const int S = shape.num_states, A = shape.num_actions, H = shape.horizon;
    const double r_max = index.r_max();

    EvalObjective objective(index, reported, selector, policy, cfg);
    const auto& seen = objective.seen();

    // Start from the fitted backward solution on the empirical support (the
    // lambda -> infinity limit); unseen coordinates take the configured edge
    // and never move.
    Grid3 f(H, S, A, 0.0);
    if (warm_start != nullptr && warm_start->same_shape(f)) {
        f = *warm_start;
    } else {
        std::vector<StepTable> r_bars;
        r_bars.reserve(static_cast<size_t>(H));
        for (int h = 0; h < H; ++h) r_bars.push_back(index.mean_reward(reported, selector, h));
        for (int h = H - 1; h >= 0; --h) {
            StepTable g = cell_mean_targets(index, r_bars[static_cast<size_t>(h)], policy, &f, h,
                                            nullptr);
            for (int s = 0; s < S; ++s)
                for (int a = 0; a < A; ++a) f(h, s, a) = g(s, a);
        }
    }
    for (int h = 0; h < H; ++h) {
        double edge = box_halfwidth(h, shape, r_max);
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a) {
                size_t k = f.idx(h, s, a);
                if (!seen[k])
                    f(h, s, a) = unseen_value(h, shape, r_max, cfg);
                else
                    f(h, s, a) = std::clamp(f(h, s, a), -edge, edge);
            }
    }

    auto project = [&](Grid3& x) {
        for (int h = 0; h < H; ++h) {
            double edge = box_halfwidth(h, shape, r_max);
            for (int s = 0; s < S; ++s)
                for (int a = 0; a < A; ++a) {
                    double& v = x(h, s, a);
                    v = std::clamp(v, -edge, edge);
                }
        }
    };

    const double step0 = cfg.optimizer.step_size > 0.0
                             ? cfg.optimizer.step_size
                             : 1.0 / (2.0 * cfg.lambda * H * index.max_mu_hat() + 1.0);
    double step = step0;
    double obj = objective(f);
    Grid3 grad(H, S, A, 0.0), trial(H, S, A, 0.0);

    bool converged = false;
    int iterations = 0;
    for (int it = 0; it < cfg.optimizer.max_iterations; ++it) {
        iterations = it + 1;
        objective.gradient(f, grad);
        for (size_t k = 0; k < grad.data().size(); ++k)
            if (!seen[k]) grad.data()[k] = 0.0;

        bool accepted = false;
        double trial_obj = 0.0;
        for (int halving = 0; halving < 60; ++halving) {
            trial = f;
            for (size_t k = 0; k < trial.data().size(); ++k)
                trial.data()[k] -= step * grad.data()[k];
            project(trial);
            trial_obj = objective(trial);
            if (trial_obj <= obj) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {  // numerical floor: no direction decreases the objective
            converged = true;
            break;
        }
        double decrease = obj - trial_obj;
        f = std::move(trial);
        trial = Grid3(H, S, A, 0.0);
        obj = trial_obj;
        step = std::min(step0, step * 2.0);
        if (decrease < cfg.optimizer.tolerance) {
            converged = true;
            break;
        }
    }

    // Projected-gradient norm at the final point, measured at the base step.
    objective.gradient(f, grad);
    for (size_t k = 0; k < grad.data().size(); ++k)
        if (!seen[k]) grad.data()[k] = 0.0;
    double pg_norm = 0.0;
    {
        Grid3 probe = f;
        for (size_t k = 0; k < probe.data().size(); ++k)
            probe.data()[k] -= step0 * grad.data()[k];
        project(probe);
        for (size_t k = 0; k < probe.data().size(); ++k)
            pg_norm = std::max(pg_norm, std::fabs(f.data()[k] - probe.data()[k]) / step0);
    }

    double head = 0.0;
    for (int a = 0; a < A; ++a)
        head += policy(0, shape.initial_state, a) * f(0, shape.initial_state, a);

    EvalResult result{QTable(std::move(f), r_max), head, obj, converged, pg_norm, iterations,
                      seen};
    return result;
}

EvalResult evaluate_policy(const OfflineDataset& dataset, const RewardProfile& reported,
                           const RewardSelector& selector, const StagePolicy& policy,
                           const EvalConfig& cfg) {
    DatasetIndex index(dataset);
    return evaluate_policy(index, reported, selector, policy, cfg);
}

StagePolicy mirror_descent_update(const StagePolicy& policy, const Grid3& q, double eta) {
    if (eta < 0.0) throw std::invalid_argument("mirror_descent_update: eta must be nonnegative");
    if (!policy.probs().same_shape(q))
        throw std::invalid_argument("mirror_descent_update: shape mismatch");
    const int H = q.horizon(), S = q.num_states(), A = q.num_actions();
    Grid3 out(H, S, A, 0.0);
    for (int h = 0; h < H; ++h) {
        for (int s = 0; s < S; ++s) {
            // max over supported actions keeps the normalizer positive even
            // when the row has exact zeros
            double m = -std::numeric_limits<double>::infinity();
            for (int a = 0; a < A; ++a)
                if (policy(h, s, a) > 0.0) m = std::max(m, q(h, s, a));
            double norm = 0.0;
            for (int a = 0; a < A; ++a) {
                double p = policy(h, s, a);
                double w = p > 0.0 ? p * std::exp(eta * (q(h, s, a) - m)) : 0.0;
                out(h, s, a) = w;
                norm += w;
            }
            for (int a = 0; a < A; ++a) out(h, s, a) /= norm;
        }
    }
    return StagePolicy(std::move(out));
}

SpiOutput soft_policy_iteration(const DatasetIndex& index, const RewardProfile& reported,
                                const RewardSelector& selector, const SpiConfig& cfg) {
    cfg.validate();
    const MdpShape& shape = index.shape();
    const int T = cfg.iterations;

    EvalConfig opt_cfg = cfg.opt_eval;
    opt_cfg.mode = EvalMode::Opt;
    EvalConfig pes_cfg = cfg.pes_eval;
    pes_cfg.mode = EvalMode::Pes;

    StagePolicy pi_opt = StagePolicy::uniform(shape);
    StagePolicy pi_pes = StagePolicy::uniform(shape);

    std::vector<StagePolicy> opt_iterates, pes_iterates;
    std::vector<QTable> opt_q, pes_q;
    std::vector<double> opt_trace, pes_trace;
    opt_iterates.reserve(static_cast<size_t>(T));
    pes_iterates.reserve(static_cast<size_t>(T));
    opt_q.reserve(static_cast<size_t>(T));
    pes_q.reserve(static_cast<size_t>(T));
    bool opt_ok = true, pes_ok = true;

    Grid3 warm_opt, warm_pes;  // previous iterate's solution, empty on t = 0
    for (int t = 0; t < T; ++t) {
        EvalResult ev_opt = evaluate_policy(index, reported, selector, pi_opt, opt_cfg,
                                            t == 0 ? nullptr : &warm_opt);
        EvalResult ev_pes = evaluate_policy(index, reported, selector, pi_pes, pes_cfg,
                                            t == 0 ? nullptr : &warm_pes);
        opt_ok = opt_ok && ev_opt.converged;
        pes_ok = pes_ok && ev_pes.converged;
        opt_iterates.push_back(pi_opt);
        pes_iterates.push_back(pi_pes);
        opt_trace.push_back(ev_opt.value_at_start);
        pes_trace.push_back(ev_pes.value_at_start);
        if (t + 1 < T) {
            pi_opt = mirror_descent_update(pi_opt, ev_opt.q.values(), cfg.eta);
            pi_pes = mirror_descent_update(pi_pes, ev_pes.q.values(), cfg.eta);
        }
        warm_opt = ev_opt.q.values();
        warm_pes = ev_pes.q.values();
        opt_q.push_back(std::move(ev_opt.q));
        pes_q.push_back(std::move(ev_pes.q));
    }

    auto mean = [](const std::vector<double>& xs) {
        double acc = 0.0;
        for (double x : xs) acc += x;
        return acc / static_cast<double>(xs.size());
    };

    SpiModeOutput optimistic{MixturePolicy(std::move(opt_iterates)), std::move(opt_q),
                             std::move(opt_trace), 0.0, opt_ok};
    optimistic.value_at_start = mean(optimistic.f1_trace);
    SpiModeOutput pessimistic{MixturePolicy(std::move(pes_iterates)), std::move(pes_q),
                              std::move(pes_trace), 0.0, pes_ok};
    pessimistic.value_at_start = mean(pessimistic.f1_trace);
    return SpiOutput{std::move(optimistic), std::move(pessimistic)};
}

LearnResult offline_vcg_learn(const OfflineDataset& dataset, const RewardProfile& reported,
                              const VcgLearnConfig& cfg) {
    cfg.spi.validate();
    if (dataset.num_agents() != reported.num_agents())
        throw std::invalid_argument("offline_vcg_learn: dataset and profile disagree on n");
    DatasetIndex index(dataset);
    const int n = reported.num_agents();

    SpiOutput welfare_run =
        soft_policy_iteration(index, reported, RewardSelector::total(), cfg.spi);
    const SpiModeOutput& chosen = welfare_run.pessimistic;

    LearnDiagnostics diag;
    diag.g1.resize(static_cast<size_t>(n));
    diag.g2.resize(static_cast<size_t>(n));
    diag.welfare_value_estimate = chosen.value_at_start;
    diag.welfare_f1_trace = chosen.f1_trace;
    diag.any_nonconverged = !(welfare_run.optimistic.all_converged && chosen.all_converged);

    EvalConfig g2_cfg = cfg.zeta2 == EvalMode::Opt ? cfg.spi.opt_eval : cfg.spi.pes_eval;
    g2_cfg.mode = cfg.zeta2;

    std::vector<double> prices(static_cast<size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        RewardSelector sel = RewardSelector::exclude(i);
        SpiOutput pivot_run = soft_policy_iteration(index, reported, sel, cfg.spi);
        diag.any_nonconverged = diag.any_nonconverged ||
                                !(pivot_run.optimistic.all_converged &&
                                  pivot_run.pessimistic.all_converged);
        double g1 = cfg.zeta1 == EvalMode::Opt ? pivot_run.optimistic.value_at_start
                                               : pivot_run.pessimistic.value_at_start;

        // Evaluate the chosen mixture component-wise under R_{-i}.
        double g2 = 0.0;
        for (const StagePolicy& component : chosen.mixture.components()) {
            EvalResult ev = evaluate_policy(index, reported, sel, component, g2_cfg);
            diag.any_nonconverged = diag.any_nonconverged || !ev.converged;
            g2 += ev.value_at_start;
        }
        g2 /= static_cast<double>(chosen.mixture.size());

        diag.g1[static_cast<size_t>(i)] = g1;
        diag.g2[static_cast<size_t>(i)] = g2;
        prices[static_cast<size_t>(i)] = g1 - g2;
    }

    return LearnResult{std::move(prices), chosen.mixture, std::move(diag)};
}

Grid3 selector_reward_table(const RewardProfile& profile, const RewardSelector& selector) {
    selector.validate(profile.num_agents());
    switch (selector.kind()) {
        case RewardSelector::Kind::Total:
            return profile.total();
        case RewardSelector::Kind::Exclude:
            return profile.excluding(selector.agent());
        case RewardSelector::Kind::SinglePlus: {
            Grid3 r = profile.excluding(selector.agent());
            const Grid3& add = selector.actual_reward();
            for (size_t k = 0; k < r.data().size(); ++k) r.data()[k] += add.data()[k];
            return r;
        }
    }
    throw std::logic_error("selector_reward_table: unreachable");
}

LambdaEta compute_lambda_eta(double r_max, int horizon, int num_actions, int iterations,
                             double eps_s, double eps_f) {
    if (r_max <= 0.0 || horizon < 1 || num_actions < 1 || iterations < 1)
        throw std::invalid_argument("compute_lambda_eta: inputs must be positive");
    if (eps_s < 0.0 || eps_f < 0.0)
        throw std::invalid_argument("compute_lambda_eta: epsilons must be nonnegative");
    double denom = eps_s + 3.0 * eps_f;
    if (denom <= 0.0)
        throw std::invalid_argument("compute_lambda_eta: eps_s + 3 eps_f must be positive");
    double h = static_cast<double>(horizon);
    LambdaEta out;
    out.lambda = std::cbrt(r_max / (h * h * denom * denom));
    out.eta = std::sqrt(std::log(static_cast<double>(num_actions)) /
                        (2.0 * h * h * r_max * r_max * static_cast<double>(iterations)));
    return out;
}

double epsilon_s(long k, double delta, int num_agents, int horizon, double r_max,
                 double log_cov_f, double log_cov_pi) {
    if (k < 1) throw std::invalid_argument("epsilon_s: K must be at least 1");
    if (!(delta > 0.0 && delta < 1.0))
        throw std::invalid_argument("epsilon_s: delta must lie in (0, 1)");
    if (num_agents < 1 || horizon < 1 || r_max <= 0.0)
        throw std::invalid_argument("epsilon_s: invalid dimensions");
    if (log_cov_f < 0.0 || log_cov_pi < 0.0)
        throw std::invalid_argument("epsilon_s: covering logs must be nonnegative");
    double h = static_cast<double>(horizon);
    double hr4 = h * h * h * h * r_max * r_max * r_max * r_max;
    double log_term =
        std::log(56.0 * num_agents * h / delta) + 2.0 * log_cov_f + log_cov_pi;
    return 5136.0 / static_cast<double>(k) * hr4 * log_term;
}

CoveringLogBounds covering_log_bounds(int num_states, int num_actions, int horizon,
                                      int iterations, double eta, double r_max, double radius) {
    if (radius <= 0.0) throw std::invalid_argument("covering_log_bounds: radius must be positive");
    if (num_states < 1 || num_actions < 1 || horizon < 1 || iterations < 1 || r_max <= 0.0 ||
        eta < 0.0)
        throw std::invalid_argument("covering_log_bounds: invalid dimensions");

    auto grid_log = [&](double rad) {
        double acc = 0.0;
        for (int h = 0; h < horizon; ++h) {
            double width = QTable::box_halfwidth(h, horizon, r_max);
            if (rad >= width) continue;  // a single ball covers the interval
            double count = std::floor(width / rad) + 1.0;
            acc += std::log(count);
        }
        return acc * num_states * num_actions;
    };

    CoveringLogBounds out;
    out.log_cov_f = grid_log(radius);
    double scale = 2.0 * eta * static_cast<double>(iterations);
    if (scale > 0.0)
        out.log_cov_pi =
            static_cast<double>(iterations) * horizon * grid_log(radius / scale);
    return out;
}

}  // namespace dvcg
