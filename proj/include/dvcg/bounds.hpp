#pragma once

#include <map>
#include <string>
#include <vector>

#include "dvcg/mdp.hpp"

namespace dvcg {

/// Worst-case transfer ratio of squared Bellman residuals from the data
/// distribution mu to a target measure nu. For the boxed tabular class the
/// supremum over residual pairs is attained by mass concentrated on a single
/// cell, so this reduces to the per-cell density-ratio supremum
///   max_h max_{(s,a): nu_h > 0} nu_h(s,a) / mu_h(s,a),
/// +infinity when some nu-supported cell has no mu mass.
double shift_coefficient(const VisitationMeasure& nu, const VisitationMeasure& mu);

/// Mirror-descent optimization term: 2 H^2 r_max sqrt(2 log A / T).
double err_opt(int horizon, double r_max, int num_actions, int iterations);

/// Per-evaluation statistical width:
/// 2 (H r_max)^(1/3) (eps_s + 3 eps_f)^(1/3) + sqrt(8 eps_s + 12 eps_f + 3 eps_ff).
double err_stat_unit(int horizon, double r_max, double eps_s, double eps_f, double eps_ff);

enum class BoundKind { Welfare, Agent, Seller, IndividualRationality, Truthfulness };

/// Inputs assembled for one suboptimality bound. `sqrt_shift_terms` holds the
/// sqrt-scale shift multipliers, already averaged over iterates or summed over
/// agents where the bound does so; required key names are listed per bound in
/// required_shift_terms().
struct ErrorBudget {
    double eps_s = 0.0;
    double eps_f = 0.0;
    double eps_ff = 0.0;
    int horizon = 1;
    double r_max = 1.0;
    int num_actions = 1;
    int iterations = 1;
    int num_agents = 1;
    std::map<std::string, double> sqrt_shift_terms;

    double err_opt_value() const;
    double err_stat_unit_value() const;
};

enum class Zeta { Opt, Pes };

/// Key names a given bound expects in ErrorBudget::sqrt_shift_terms.
std::vector<std::string> required_shift_terms(BoundKind kind, Zeta zeta1, Zeta zeta2);

/// Assemble the right-hand side of one suboptimality guarantee. For
/// IndividualRationality the returned value b means "utility >= -b".
/// Throws listing any missing shift term.
double theorem_bound(const ErrorBudget& budget, BoundKind kind, Zeta zeta1, Zeta zeta2);

struct BoundComparison {
    std::string metric;
    double measured = 0.0;
    double bound = 0.0;
    bool violated = false;
};

/// Tabulate measured mechanism metrics against their theorem bounds.
/// `measured` maps metric name -> value; `bounds` maps the same names to
/// bound values. IR entries compare measured utility against -bound.
std::vector<BoundComparison> empirical_vs_bound(
    const std::map<std::string, double>& measured,
    const std::map<std::string, double>& bounds,
    const std::map<std::string, bool>& is_lower_bound);

}  // namespace dvcg
