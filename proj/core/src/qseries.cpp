#include "bpre/qseries.hpp"

#include <cmath>
#include <deque>
#include <limits>

#include "bpre/report.hpp"
#include "json.hpp"

namespace bpre {

namespace {

constexpr double kDenominatorGuard = 1e-14;

}  // namespace

QTable q_table(const EnvironmentModel& env, int k, std::size_t truncation) {
    if (k < 1) throw Error(ErrorKind::BadParams, "k must be >= 1");
    if (truncation < static_cast<std::size_t>(k)) {
        throw Error(ErrorKind::TruncationTooSmall, "q-table horizon below k");
    }
    if (!env.no_extinction()) {
        throw Error(ErrorKind::ExtinctionPossible, "q-series need p0 = 0 on every atom");
    }
    return q_table(env, build_kernel(env, truncation), k);
}

QTable q_table(const EnvironmentModel& env, const TransitionKernel& kernel, int k) {
    if (k < 1) throw Error(ErrorKind::BadParams, "k must be >= 1");
    if (!env.no_extinction()) {
        throw Error(ErrorKind::ExtinctionPossible, "q-series need p0 = 0 on every atom");
    }
    const std::size_t truncation = kernel.truncation();
    const auto kk = static_cast<std::size_t>(k);
    if (truncation < kk) throw Error(ErrorKind::TruncationTooSmall, "q-table horizon below k");

    const double gk = gamma_k(env, k);
    if (!(gk > 0.0) || !(gk < 1.0)) {
        throw Error(ErrorKind::DegenerateGamma,
                    "gamma_" + std::to_string(k) + " = " + format_double(gk) + " not in (0, 1)");
    }

    QTable qt;
    qt.k = k;
    qt.truncation = truncation;
    qt.gamma = gk;
    qt.q.assign(truncation - kk + 1, 0.0);
    qt.q[0] = 1.0;
    for (std::size_t j = kk + 1; j <= truncation; ++j) {
        double acc = 0.0;
        for (std::size_t i = kk; i < j; ++i) {
            const double qi = qt.q[i - kk];
            if (qi != 0.0) acc += kernel(i, j) * qi;
        }
        if (acc == 0.0) continue;
        const double denom = gk - gamma_k(env, static_cast<int>(j));
        if (denom < kDenominatorGuard) {
            throw Error(ErrorKind::DegenerateGamma,
                        "gamma_k - gamma_j = " + format_double(denom) + " at j = " + std::to_string(j));
        }
        qt.q[j - kk] = acc / denom;
    }
    return qt;
}

double recurrence_residual(const QTable& qt, const TransitionKernel& kernel) {
    const auto kk = static_cast<std::size_t>(qt.k);
    double worst = 0.0;
    for (std::size_t j = kk; j <= qt.truncation; ++j) {
        double acc = 0.0;
        for (std::size_t i = kk; i <= j; ++i) acc += kernel(i, j) * qt.at(i);
        worst = std::max(worst, std::abs(qt.gamma * qt.at(j) - acc));
    }
    return worst;
}

std::vector<bool> accessible_states(const TransitionKernel& kernel, int k) {
    const std::size_t truncation = kernel.truncation();
    std::vector<bool> seen(truncation + 1, false);
    std::deque<std::size_t> queue;
    seen[static_cast<std::size_t>(k)] = true;
    queue.push_back(static_cast<std::size_t>(k));
    while (!queue.empty()) {
        const std::size_t i = queue.front();
        queue.pop_front();
        const auto row = kernel.row(i);
        for (std::size_t off = 0; off < row.size(); ++off) {
            const std::size_t j = kernel.first(i) + off;
            if (row[off] > 0.0 && !seen[j]) {
                seen[j] = true;
                queue.push_back(j);
            }
        }
    }
    return seen;
}

BoundedValue Q_eval(const QTable& qt, double t) {
    if (!(t >= 0.0 && t < 1.0)) {
        throw Error(ErrorKind::DomainError, "Q_k needs t in [0, 1), got " + std::to_string(t));
    }
    double acc = 0.0;
    for (auto it = qt.q.rbegin(); it != qt.q.rend(); ++it) acc = acc * t + *it;
    const double value = acc * std::pow(t, qt.k);

    // growth ratio from the last two nonzero coefficients
    std::size_t last = qt.q.size();
    std::size_t prev = qt.q.size();
    for (std::size_t idx = qt.q.size(); idx-- > 0;) {
        if (qt.q[idx] == 0.0) continue;
        if (last == qt.q.size()) {
            last = idx;
        } else {
            prev = idx;
            break;
        }
    }
    double tail = 0.0;
    if (prev < qt.q.size() && t > 0.0) {
        const double g = std::pow(qt.q[last] / qt.q[prev], 1.0 / static_cast<double>(last - prev));
        const double qJ = qt.q[last] * std::pow(g, static_cast<double>(qt.q.size() - 1 - last));
        const double denom = 1.0 - t * g;
        tail = denom > 0.0
                   ? qJ * std::pow(t, static_cast<double>(qt.truncation + 1)) / denom
                   : std::numeric_limits<double>::infinity();
    }
    return {value, tail};
}

FunctionalEqReport functional_eq_residual(const QTable& qt, const EnvironmentModel& env,
                                          std::span<const double> t_grid) {
    constexpr double eps = std::numeric_limits<double>::epsilon();
    // Horner on J nonnegative terms: relative error below 2 (J + 2) eps
    const double horner_rel = 2.0 * static_cast<double>(qt.truncation + 2) * eps;

    FunctionalEqReport report;
    report.k = qt.k;
    report.truncation = qt.truncation;
    for (const double t : t_grid) {
        if (!(t >= 0.0 && t <= 0.9)) {
            throw Error(ErrorKind::DomainError, "functional-equation grid must lie in [0, 0.9]");
        }
        const auto left = Q_eval(qt, t);
        double rhs = 0.0;
        double rhs_tail = 0.0;
        for (const auto& a : env.atoms()) {
            const auto right = Q_eval(qt, gf_eval(a.law, t));
            rhs += a.weight * right.value;
            rhs_tail += a.weight * right.tail_bound;
        }
        FunctionalEqEntry entry;
        entry.t = t;
        entry.lhs = qt.gamma * left.value;
        entry.rhs = rhs;
        entry.residual = std::abs(entry.lhs - entry.rhs);
        entry.tolerance = qt.gamma * left.tail_bound + rhs_tail +
                          horner_rel * (std::abs(entry.lhs) + std::abs(entry.rhs));
        report.max_residual = std::max(report.max_residual, entry.residual);
        if (!(entry.residual <= entry.tolerance)) report.within_tolerance = false;
        report.entries.push_back(entry);
    }
    return report;
}

std::string functional_eq_report_json(const FunctionalEqReport& report) {
    nlohmann::ordered_json doc;
    doc["k"] = report.k;
    doc["J"] = report.truncation;
    doc["max_residual"] = report.max_residual;
    doc["within_tolerance"] = report.within_tolerance;
    auto& arr = doc["entries"] = nlohmann::ordered_json::array();
    for (const auto& e : report.entries) {
        arr.push_back({{"t", e.t},
                       {"lhs", e.lhs},
                       {"rhs", e.rhs},
                       {"residual", e.residual},
                       {"tolerance", e.tolerance}});
    }
    return doc.dump(2);
}

RatioSequence ratio_sequence(const EnvironmentModel& env, int k, std::size_t j, int n_max,
                             std::size_t truncation, double slack) {
    if (j < static_cast<std::size_t>(k)) throw Error(ErrorKind::BadParams, "ratio sequence needs j >= k");
    if (n_max < 1) throw Error(ErrorKind::BadParams, "n_max must be >= 1");
    if (truncation == 0) truncation = env.no_extinction() ? j : std::max<std::size_t>(2 * j, 200);

    const double gk = gamma_k(env, k);
    if (!(gk > 0.0)) throw Error(ErrorKind::DegenerateGamma, "gamma_k = 0, ratios undefined");
    RatioSequence seq;
    seq.k = k;
    seq.j = j;
    const auto kernel = build_kernel(env, truncation);
    // Propagate P_k(Z_n = .) / gamma_k^n directly so long horizons do not underflow. State 0 and
    // the deficit never feed j >= 1, and dropping them keeps the scaled vector finite.
    auto dist = initial_distribution(k, truncation);
    for (int n = 0; n <= n_max; ++n) {
        if (n > 0) {
            dist = propagate(kernel, dist);
            for (double& x : dist.probs) x /= gk;
            dist.probs[0] = 0.0;
            dist.deficit = 0.0;
        }
        seq.values.push_back(dist.prob(j));
        if (n > 0 && seq.values[n] < seq.values[n - 1] - slack) seq.nondecreasing = false;
    }
    return seq;
}

double series_moment(const QTable& qt, double r) {
    double acc = 0.0;
    for (std::size_t idx = 0; idx < qt.q.size(); ++idx) {
        if (qt.q[idx] == 0.0) continue;
        acc += std::pow(static_cast<double>(idx + static_cast<std::size_t>(qt.k)), -r) * qt.q[idx];
    }
    return acc;
}

void write_qtable_csv(std::ostream& out, const QTable& qt) {
    out << "k,j,q\n";
    for (std::size_t idx = 0; idx < qt.q.size(); ++idx) {
        out << qt.k << ',' << idx + static_cast<std::size_t>(qt.k) << ',' << format_double(qt.q[idx])
            << '\n';
    }
}

}  // namespace bpre
