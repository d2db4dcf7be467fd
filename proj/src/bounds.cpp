#include "dvcg/bounds.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace dvcg {

double shift_coefficient(const VisitationMeasure& nu, const VisitationMeasure& mu) {
    if (!nu.table().same_shape(mu.table()))
        throw std::invalid_argument("shift_coefficient: shape mismatch");
    double sup = 0.0;
    const Grid3& nt = nu.table();
    for (int h = 0; h < nt.horizon(); ++h)
        for (int s = 0; s < nt.num_states(); ++s)
            for (int a = 0; a < nt.num_actions(); ++a) {
                double num = nu(h, s, a);
                if (num <= 0.0) continue;
                double den = mu(h, s, a);
                if (den <= 0.0) return std::numeric_limits<double>::infinity();
                sup = std::max(sup, num / den);
            }
    return sup;
}

double err_opt(int horizon, double r_max, int num_actions, int iterations) {
    if (horizon < 1 || r_max <= 0.0 || num_actions < 1)
        throw std::invalid_argument("err_opt: invalid dimensions");
    if (iterations < 1) throw std::invalid_argument("err_opt: iterations must be positive");
    double h = static_cast<double>(horizon);
    return 2.0 * h * h * r_max *
           std::sqrt(2.0 * std::log(static_cast<double>(num_actions)) /
                     static_cast<double>(iterations));
}

double err_stat_unit(int horizon, double r_max, double eps_s, double eps_f, double eps_ff) {
    if (horizon < 1 || r_max <= 0.0)
        throw std::invalid_argument("err_stat_unit: invalid dimensions");
    if (eps_s < 0.0 || eps_f < 0.0 || eps_ff < 0.0)
        throw std::invalid_argument("err_stat_unit: epsilons must be nonnegative");
    double hr = horizon * r_max;
    return 2.0 * std::cbrt(hr) * std::cbrt(eps_s + 3.0 * eps_f) +
           std::sqrt(8.0 * eps_s + 12.0 * eps_f + 3.0 * eps_ff);
}

double ErrorBudget::err_opt_value() const {
    return err_opt(horizon, r_max, num_actions, iterations);
}

double ErrorBudget::err_stat_unit_value() const {
    return err_stat_unit(horizon, r_max, eps_s, eps_f, eps_ff);
}

namespace {

// Shift-term keys. "iter" marks quantities averaged over the T policy
// iterates, "sum" quantities summed over agents; "self" means the policy is
// measured against its own visitation.
constexpr const char* kAvgIterVsOpt = "avg_sqrt_c_iter_vs_opt";
constexpr const char* kG1Self = "sqrt_c_g1_self";
constexpr const char* kOutSelf = "sqrt_c_out_self";
constexpr const char* kSumG1Self = "sum_sqrt_c_g1_self";
constexpr const char* kSumAvgG1IterVsOpt = "sum_avg_sqrt_c_g1_iter_vs_opt";
constexpr const char* kSumAvgG1IterSelf = "sum_avg_sqrt_c_g1_iter_self";
constexpr const char* kAvgG1IterVsOpt = "avg_sqrt_c_g1_iter_vs_opt";
constexpr const char* kAvgG1IterSelf = "avg_sqrt_c_g1_iter_self";
constexpr const char* kMisreportOutSelf = "sqrt_c_misreport_out_self";

double get_term(const ErrorBudget& budget, const char* key) {
    auto it = budget.sqrt_shift_terms.find(key);
    if (it == budget.sqrt_shift_terms.end()) {
        std::ostringstream msg;
        msg << "theorem_bound: missing shift term '" << key << "'";
        throw std::invalid_argument(msg.str());
    }
    return it->second;
}

}  // namespace

std::vector<std::string> required_shift_terms(BoundKind kind, Zeta zeta1, Zeta zeta2) {
    switch (kind) {
        case BoundKind::Welfare:
            return {kAvgIterVsOpt};
        case BoundKind::Agent:
            if (zeta1 == Zeta::Pes && zeta2 == Zeta::Opt) return {kAvgIterVsOpt};
            return {kAvgIterVsOpt, kG1Self, kOutSelf};
        case BoundKind::Seller:
            if (zeta1 == Zeta::Pes && zeta2 == Zeta::Opt)
                return {kSumG1Self, kSumAvgG1IterVsOpt, kOutSelf};
            return {kSumAvgG1IterVsOpt, kSumAvgG1IterSelf};
        case BoundKind::IndividualRationality:
            if (zeta1 == Zeta::Pes && zeta2 == Zeta::Opt)
                return {kAvgIterVsOpt, kAvgG1IterVsOpt, kG1Self};
            return {kAvgIterVsOpt, kAvgG1IterVsOpt, kAvgG1IterSelf, kOutSelf};
        case BoundKind::Truthfulness:
            if (zeta2 == Zeta::Opt) return {kAvgIterVsOpt, kMisreportOutSelf};
            return {kAvgIterVsOpt, kOutSelf};
    }
    throw std::logic_error("required_shift_terms: unreachable");
}

double theorem_bound(const ErrorBudget& budget, BoundKind kind, Zeta zeta1, Zeta zeta2) {
    for (const auto& key : required_shift_terms(kind, zeta1, zeta2))
        (void)get_term(budget, key.c_str());

    const double opt = budget.err_opt_value();
    const double unit = budget.err_stat_unit_value();
    const double sqrt_ef = std::sqrt(budget.eps_f);
    const double cube = 2.0 * std::cbrt(budget.horizon * budget.r_max) *
                        std::cbrt(budget.eps_s + 3.0 * budget.eps_f);
    const double h = static_cast<double>(budget.horizon);
    const double n = static_cast<double>(budget.num_agents);

    switch (kind) {
        case BoundKind::Welfare:
            return opt + sqrt_ef + cube + h * get_term(budget, kAvgIterVsOpt) * unit;
        case BoundKind::Agent:
            if (zeta1 == Zeta::Pes && zeta2 == Zeta::Opt)
                return opt + 3.0 * sqrt_ef + 3.0 * cube +
                       h * get_term(budget, kAvgIterVsOpt) * unit;
            return opt + sqrt_ef + cube +
                   h *
                       (get_term(budget, kAvgIterVsOpt) + get_term(budget, kG1Self) +
                        get_term(budget, kOutSelf)) *
                       unit;
        case BoundKind::Seller:
            if (zeta1 == Zeta::Pes && zeta2 == Zeta::Opt)
                return n * opt + n * sqrt_ef + n * cube +
                       h *
                           (get_term(budget, kSumG1Self) + get_term(budget, kSumAvgG1IterVsOpt) +
                            n * get_term(budget, kOutSelf)) *
                           unit;
            return n * opt + 2.0 * n * sqrt_ef + 2.0 * n * cube +
                   h *
                       (get_term(budget, kSumAvgG1IterVsOpt) +
                        get_term(budget, kSumAvgG1IterSelf)) *
                       unit;
        case BoundKind::IndividualRationality:
            if (zeta1 == Zeta::Pes && zeta2 == Zeta::Opt)
                return 2.0 * opt + 3.0 * sqrt_ef + 3.0 * cube +
                       h *
                           (get_term(budget, kAvgIterVsOpt) + get_term(budget, kAvgG1IterVsOpt) +
                            get_term(budget, kG1Self)) *
                           unit;
            return 2.0 * opt + 2.0 * sqrt_ef + 2.0 * cube +
                   h *
                       (get_term(budget, kAvgIterVsOpt) + get_term(budget, kAvgG1IterVsOpt) +
                        get_term(budget, kAvgG1IterSelf) + get_term(budget, kOutSelf)) *
                       unit;
        case BoundKind::Truthfulness:
            if (zeta2 == Zeta::Opt)
                return opt + 2.0 * sqrt_ef + 2.0 * cube +
                       h *
                           (get_term(budget, kAvgIterVsOpt) +
                            get_term(budget, kMisreportOutSelf)) *
                           unit;
            return opt + 2.0 * sqrt_ef + 2.0 * cube +
                   h * (get_term(budget, kAvgIterVsOpt) + get_term(budget, kOutSelf)) * unit;
    }
    throw std::logic_error("theorem_bound: unreachable");
}

std::vector<BoundComparison> empirical_vs_bound(
    const std::map<std::string, double>& measured,
    const std::map<std::string, double>& bounds,
    const std::map<std::string, bool>& is_lower_bound) {
    std::vector<BoundComparison> out;
    out.reserve(measured.size());
    for (const auto& [name, value] : measured) {
        auto bit = bounds.find(name);
        if (bit == bounds.end())
            throw std::invalid_argument("empirical_vs_bound: no bound for metric '" + name + "'");
        BoundComparison cmp;
        cmp.metric = name;
        cmp.measured = value;
        cmp.bound = bit->second;
        auto lit = is_lower_bound.find(name);
        bool lower = lit != is_lower_bound.end() && lit->second;
        cmp.violated = lower ? (value < -cmp.bound) : (value > cmp.bound);
        out.push_back(std::move(cmp));
    }
    return out;
}

}  // namespace dvcg
