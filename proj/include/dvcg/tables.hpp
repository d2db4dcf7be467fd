#pragma once

#include <span>
#include <stdexcept>
#include <vector>

namespace dvcg {

/// Dense step-indexed table of reals laid out as [h][s][a].
class Grid3 {
public:
    Grid3() = default;
    Grid3(int horizon, int num_states, int num_actions, double fill = 0.0)
        : H_(horizon), S_(num_states), A_(num_actions),
          v_(static_cast<size_t>(horizon) * num_states * num_actions, fill) {
        if (horizon <= 0 || num_states <= 0 || num_actions <= 0)
            throw std::invalid_argument("Grid3: dimensions must be positive");
    }

    double operator()(int h, int s, int a) const { return v_[idx(h, s, a)]; }
    double& operator()(int h, int s, int a) { return v_[idx(h, s, a)]; }

    int horizon() const { return H_; }
    int num_states() const { return S_; }
    int num_actions() const { return A_; }
    bool empty() const { return v_.empty(); }

    bool same_shape(const Grid3& o) const {
        return H_ == o.H_ && S_ == o.S_ && A_ == o.A_;
    }

    const std::vector<double>& data() const { return v_; }
    std::vector<double>& data() { return v_; }

    size_t idx(int h, int s, int a) const {
        return (static_cast<size_t>(h) * S_ + s) * A_ + a;
    }

private:
    int H_ = 0, S_ = 0, A_ = 0;
    std::vector<double> v_;
};

/// One step of a Grid3: an S x A matrix.
class StepTable {
public:
    StepTable() = default;
    StepTable(int num_states, int num_actions, double fill = 0.0)
        : S_(num_states), A_(num_actions),
          v_(static_cast<size_t>(num_states) * num_actions, fill) {}

    double operator()(int s, int a) const { return v_[static_cast<size_t>(s) * A_ + a]; }
    double& operator()(int s, int a) { return v_[static_cast<size_t>(s) * A_ + a]; }

    int num_states() const { return S_; }
    int num_actions() const { return A_; }
    const std::vector<double>& data() const { return v_; }
    std::vector<double>& data() { return v_; }

private:
    int S_ = 0, A_ = 0;
    std::vector<double> v_;
};

inline StepTable slice(const Grid3& g, int h) {
    StepTable t(g.num_states(), g.num_actions());
    for (int s = 0; s < g.num_states(); ++s)
        for (int a = 0; a < g.num_actions(); ++a)
            t(s, a) = g(h, s, a);
    return t;
}

inline void set_slice(Grid3& g, int h, const StepTable& t) {
    for (int s = 0; s < g.num_states(); ++s)
        for (int a = 0; a < g.num_actions(); ++a)
            g(h, s, a) = t(s, a);
}

/// Transition kernel laid out as [h][s][a][s'].
class TransitionTable {
public:
    TransitionTable() = default;
    TransitionTable(int horizon, int num_states, int num_actions, double fill = 0.0)
        : H_(horizon), S_(num_states), A_(num_actions),
          v_(static_cast<size_t>(horizon) * num_states * num_actions * num_states, fill) {}

    double operator()(int h, int s, int a, int sp) const { return v_[idx(h, s, a) + sp]; }
    double& operator()(int h, int s, int a, int sp) { return v_[idx(h, s, a) + sp]; }

    std::span<const double> row(int h, int s, int a) const {
        return {v_.data() + idx(h, s, a), static_cast<size_t>(S_)};
    }

    int horizon() const { return H_; }
    int num_states() const { return S_; }
    int num_actions() const { return A_; }
    const std::vector<double>& data() const { return v_; }
    std::vector<double>& data() { return v_; }

private:
    size_t idx(int h, int s, int a) const {
        return ((static_cast<size_t>(h) * S_ + s) * A_ + a) * S_;
    }

    int H_ = 0, S_ = 0, A_ = 0;
    std::vector<double> v_;
};

}  // namespace dvcg
