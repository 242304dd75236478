#pragma once

#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "bpre/environment.hpp"
#include "bpre/exact_engine.hpp"

namespace bpre {

/// Limiting coefficients q_{k,j} = lim_n P_k(Z_n = j) / gamma_k^n for j = k..J.
struct QTable {
    int k = 1;
    std::size_t truncation = 0;
    double gamma = 0.0;
    std::vector<double> q;  // q[j - k]

    double at(std::size_t j) const {
        const auto kk = static_cast<std::size_t>(k);
        return j < kk || j > truncation ? 0.0 : q[j - kk];
    }
};

/// Solves gamma_k q_j = sum_{i=k}^{j} p(i, j) q_i forward from q_k = 1.
/// Requires p0 = 0 on every atom (ExtinctionPossible) and gamma_k in (0, 1) (DegenerateGamma).
QTable q_table(const EnvironmentModel& env, int k, std::size_t truncation);
QTable q_table(const EnvironmentModel& env, const TransitionKernel& kernel, int k);

/// max_j |gamma_k q_j - sum_{i<=j} p(i, j) q_i| using the kernel diagonal.
double recurrence_residual(const QTable& qt, const TransitionKernel& kernel);

/// States reachable from k in the kernel's transition graph (restricted to 0..J).
std::vector<bool> accessible_states(const TransitionKernel& kernel, int k);

/// Q_k(t) = sum_{j=k}^{J} q_j t^j. The tail estimate q_J t^(J+1) / (1 - t g) uses the
/// observed growth ratio g of the last nonzero coefficients; it is a diagnostic, not a bound.
BoundedValue Q_eval(const QTable& qt, double t);

struct FunctionalEqEntry {
    double t;
    double lhs;        // gamma_k Q_k(t)
    double rhs;        // E Q_k(f0(t))
    double residual;
    double tolerance;  // tail estimates of both sides plus Horner rounding allowance
};

struct FunctionalEqReport {
    int k = 1;
    std::size_t truncation = 0;
    std::vector<FunctionalEqEntry> entries;
    double max_residual = 0.0;
    bool within_tolerance = true;
};

/// Checks gamma_k Q_k(t) = E Q_k(f0(t)) on a grid in [0, 0.9].
FunctionalEqReport functional_eq_residual(const QTable& qt, const EnvironmentModel& env,
                                          std::span<const double> t_grid);

std::string functional_eq_report_json(const FunctionalEqReport& report);

struct RatioSequence {
    int k = 1;
    std::size_t j = 1;
    std::vector<double> values;  // a_{k,n}(j), n = 0..n_max
    bool nondecreasing = true;
};

/// a_{k,n}(j) = P_k(Z_n = j) / gamma_k^n for n = 0..n_max. `truncation == 0` picks j when
/// p0 = 0 (states above j cannot feed j) and max(2j, 200) otherwise.
RatioSequence ratio_sequence(const EnvironmentModel& env, int k, std::size_t j, int n_max,
                             std::size_t truncation = 0, double slack = 0.0);

/// sum_{j=k}^{J} j^{-r} q_j.
double series_moment(const QTable& qt, double r);

/// CSV `k,j,q`.
void write_qtable_csv(std::ostream& out, const QTable& qt);

}  // namespace bpre
