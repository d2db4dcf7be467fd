#include "dvcg/mdp.hpp"

#include <cmath>
#include <stdexcept>

namespace dvcg {

namespace detail {

void check_shape_match(const Grid3& a, const Grid3& b, const std::string& what) {
    if (!a.same_shape(b))
        throw std::invalid_argument(what + ": table dimensions do not match");
}

void check_probability_rows(const Grid3& probs, const std::string& what) {
    for (int h = 0; h < probs.horizon(); ++h) {
        for (int s = 0; s < probs.num_states(); ++s) {
            double sum = 0.0;
            for (int a = 0; a < probs.num_actions(); ++a) {
                double p = probs(h, s, a);
                if (p < 0.0)
                    throw std::invalid_argument(what + ": negative probability entry");
                sum += p;
            }
            if (std::fabs(sum - 1.0) > kRowSumTol)
                throw std::invalid_argument(what + ": probability row does not sum to 1");
        }
    }
}

}  // namespace detail

TabularMdp::TabularMdp(int num_states, int num_actions, int horizon,
                       TransitionTable transition, int initial_state)
    : S_(num_states), A_(num_actions), H_(horizon), s0_(initial_state),
      P_(std::move(transition)) {
    if (S_ <= 0 || A_ <= 0 || H_ <= 0)
        throw std::invalid_argument("TabularMdp: dimensions must be positive");
    if (P_.horizon() != H_ || P_.num_states() != S_ || P_.num_actions() != A_)
        throw std::invalid_argument("TabularMdp: transition table has wrong dimensions");
    if (s0_ < 0 || s0_ >= S_)
        throw std::invalid_argument("TabularMdp: initial state out of range");
    for (int h = 0; h < H_; ++h) {
        for (int s = 0; s < S_; ++s) {
            for (int a = 0; a < A_; ++a) {
                double sum = 0.0;
                for (int sp = 0; sp < S_; ++sp) {
                    double p = P_(h, s, a, sp);
                    if (p < 0.0)
                        throw std::invalid_argument("TabularMdp: negative transition probability");
                    sum += p;
                }
                if (std::fabs(sum - 1.0) > kRowSumTol)
                    throw std::invalid_argument("TabularMdp: transition row does not sum to 1");
            }
        }
    }
}

StagePolicy::StagePolicy(Grid3 probs) : probs_(std::move(probs)) {
    detail::check_probability_rows(probs_, "StagePolicy");
}

StagePolicy StagePolicy::uniform(const MdpShape& shape) {
    Grid3 p(shape.horizon, shape.num_states, shape.num_actions,
            1.0 / shape.num_actions);
    return StagePolicy(std::move(p));
}

MixturePolicy::MixturePolicy(std::vector<StagePolicy> components)
    : components_(std::move(components)) {
    if (components_.empty())
        throw std::invalid_argument("MixturePolicy: needs at least one component");
    for (const auto& c : components_)
        detail::check_shape_match(c.probs(), components_.front().probs(), "MixturePolicy");
}

QTable::QTable(Grid3 values, double r_max) : values_(std::move(values)), r_max_(r_max) {
    if (r_max_ <= 0.0)
        throw std::invalid_argument("QTable: r_max must be positive");
    const int H = values_.horizon();
    for (int h = 0; h < H; ++h) {
        double bound = box_halfwidth(h, H, r_max_) * (1.0 + 1e-9) + 1e-12;
        for (int s = 0; s < values_.num_states(); ++s)
            for (int a = 0; a < values_.num_actions(); ++a)
                if (std::fabs(values_(h, s, a)) > bound)
                    throw std::invalid_argument("QTable: value outside the per-step box");
    }
}

VisitationMeasure::VisitationMeasure(Grid3 d) : d_(std::move(d)) {
    for (int h = 0; h < d_.horizon(); ++h) {
        double sum = 0.0;
        for (int s = 0; s < d_.num_states(); ++s)
            for (int a = 0; a < d_.num_actions(); ++a) {
                double v = d_(h, s, a);
                if (v < 0.0)
                    throw std::invalid_argument("VisitationMeasure: negative entry");
                sum += v;
            }
        if (std::fabs(sum - 1.0) > kMeasureSumTol)
            throw std::invalid_argument("VisitationMeasure: step mass does not sum to 1");
    }
}

RewardProfile::RewardProfile(double r_max, Grid3 seller_reward,
                             std::vector<Grid3> agent_rewards, RewardRole role)
    : r_max_(r_max), seller_(std::move(seller_reward)), agents_(std::move(agent_rewards)),
      role_(role) {
    if (agents_.empty())
        throw std::invalid_argument("RewardProfile: needs at least one agent");
    if (r_max_ < 1.0)
        throw std::invalid_argument("RewardProfile: r_max must be at least 1");
    const double n = static_cast<double>(agents_.size());
    const double tol = 1e-12;
    for (const auto& g : agents_) {
        detail::check_shape_match(g, seller_, "RewardProfile");
        for (double v : g.data())
            if (v < -tol || v > 1.0 + tol)
                throw std::invalid_argument("RewardProfile: agent reward outside [0, 1]");
    }
    for (double v : seller_.data())
        if (v < -r_max_ - tol || v > r_max_ - n + tol)
            throw std::invalid_argument("RewardProfile: seller reward outside [-r_max, r_max - n]");
}

const Grid3& RewardProfile::agent(int i) const {
    if (i < 0 || i >= num_agents())
        throw std::invalid_argument("RewardProfile: agent index out of range");
    return agents_[static_cast<size_t>(i)];
}

Grid3 RewardProfile::total() const {
    Grid3 r = seller_;
    for (const auto& g : agents_)
        for (size_t k = 0; k < r.data().size(); ++k) r.data()[k] += g.data()[k];
    return r;
}

Grid3 RewardProfile::excluding(int i) const {
    if (i < 0 || i >= num_agents())
        throw std::invalid_argument("RewardProfile: agent index out of range");
    Grid3 r = seller_;
    for (int j = 0; j < num_agents(); ++j) {
        if (j == i) continue;
        const auto& g = agents_[static_cast<size_t>(j)];
        for (size_t k = 0; k < r.data().size(); ++k) r.data()[k] += g.data()[k];
    }
    return r;
}

RewardProfile RewardProfile::with_agent(int i, Grid3 reward, RewardRole role) const {
    if (i < 0 || i >= num_agents())
        throw std::invalid_argument("RewardProfile: agent index out of range");
    std::vector<Grid3> agents = agents_;
    agents[static_cast<size_t>(i)] = std::move(reward);
    return RewardProfile(r_max_, seller_, std::move(agents), role);
}

DataDistribution::DataDistribution(Grid3 mu) : mu_(std::move(mu)) {
    for (int h = 0; h < mu_.horizon(); ++h) {
        double sum = 0.0;
        for (int s = 0; s < mu_.num_states(); ++s)
            for (int a = 0; a < mu_.num_actions(); ++a) {
                double v = mu_(h, s, a);
                if (v < 0.0)
                    throw std::invalid_argument("DataDistribution: negative entry");
                sum += v;
            }
        if (std::fabs(sum - 1.0) > kMeasureSumTol)
            throw std::invalid_argument("DataDistribution: step mass does not sum to 1");
    }
}

DataDistribution DataDistribution::uniform(const MdpShape& shape) {
    Grid3 mu(shape.horizon, shape.num_states, shape.num_actions,
             1.0 / (static_cast<double>(shape.num_states) * shape.num_actions));
    return DataDistribution(std::move(mu));
}

}  // namespace dvcg
