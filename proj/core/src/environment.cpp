#include "bpre/environment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace bpre {

namespace {

constexpr double kNegativeTol = 1e-15;
constexpr double kSumTol = 1e-9;

}  // namespace

OffspringLaw make_offspring_law(std::vector<double> pmf) {
    if (pmf.empty()) throw Error(ErrorKind::BadNormalization, "empty offspring pmf");
    for (std::size_t i = 0; i < pmf.size(); ++i) {
        if (!std::isfinite(pmf[i])) {
            throw Error(ErrorKind::BadNormalization, "non-finite entry at index " + std::to_string(i));
        }
        if (pmf[i] < -kNegativeTol) {
            throw Error(ErrorKind::NegativeMass,
                        "p_" + std::to_string(i) + " = " + std::to_string(pmf[i]));
        }
        if (pmf[i] < 0.0) pmf[i] = 0.0;
    }
    const double sum = std::accumulate(pmf.begin(), pmf.end(), 0.0);
    if (!(std::abs(sum - 1.0) <= kSumTol)) {
        throw Error(ErrorKind::BadNormalization, "pmf sums to " + std::to_string(sum));
    }
    for (auto& p : pmf) p /= sum;
    while (pmf.size() > 1 && pmf.back() == 0.0) pmf.pop_back();

    OffspringLaw law;
    law.mean_ = 0.0;
    for (std::size_t i = 1; i < pmf.size(); ++i) law.mean_ += static_cast<double>(i) * pmf[i];
    law.pmf_ = std::move(pmf);
    return law;
}

double gf_eval(const OffspringLaw& law, double t) {
    if (!(t >= 0.0 && t <= 1.0)) {
        throw Error(ErrorKind::DomainError, "generating function argument " + std::to_string(t));
    }
    const auto pmf = law.pmf();
    double acc = 0.0;
    for (auto it = pmf.rbegin(); it != pmf.rend(); ++it) acc = acc * t + *it;
    return acc;
}

std::size_t fractional_linear_default_truncation(double a0, double b0, double tail_tol) {
    // tail beyond M is (1 - a0) b0^M
    std::size_t m = 1;
    double tail = (1.0 - a0) * b0;
    while (tail >= tail_tol) {
        tail *= b0;
        ++m;
    }
    return m;
}

OffspringLaw fractional_linear_law(const FractionalLinearParams& params) {
    const double a0 = params.a0;
    const double b0 = params.b0;
    if (!(a0 >= 0.0 && a0 < 1.0) || !(b0 > 0.0 && b0 < 1.0) || a0 + b0 > 1.0) {
        throw Error(ErrorKind::BadParams, "fractional-linear parameters need a0 in [0,1), "
                                          "b0 in (0,1), a0 + b0 <= 1");
    }
    const std::size_t m = params.max_offspring == 0
                              ? fractional_linear_default_truncation(a0, b0)
                              : params.max_offspring;

    std::vector<double> pmf(m + 1, 0.0);
    pmf[0] = a0;
    double geom = (1.0 - a0) * (1.0 - b0);
    for (std::size_t j = 1; j <= m; ++j) {
        pmf[j] = geom;
        geom *= b0;
    }
    pmf[m] += (1.0 - a0) * std::pow(b0, static_cast<double>(m));

    auto law = make_offspring_law(std::move(pmf));
    law.fl_ = FractionalLinearParams{a0, b0, m};
    return law;
}

EnvironmentModel::EnvironmentModel(std::vector<EnvironmentAtom> atoms) : atoms_(std::move(atoms)) {
    if (atoms_.empty()) throw Error(ErrorKind::BadParams, "environment needs at least one atom");
    double total = 0.0;
    for (const auto& a : atoms_) {
        if (!(a.weight > 0.0) || !std::isfinite(a.weight)) {
            throw Error(ErrorKind::BadParams, "atom weights must be positive");
        }
        total += a.weight;
    }
    if (std::abs(total - 1.0) > kSumTol) {
        throw Error(ErrorKind::BadNormalization, "atom weights sum to " + std::to_string(total));
    }
    for (auto& a : atoms_) {
        a.weight /= total;
        max_offspring_ = std::max(max_offspring_, a.law.max_offspring());
    }
}

EnvironmentModel EnvironmentModel::single(OffspringLaw law) {
    std::vector<EnvironmentAtom> atoms;
    atoms.push_back({1.0, std::move(law)});
    return EnvironmentModel(std::move(atoms));
}

bool EnvironmentModel::no_extinction() const {
    for (const auto& a : atoms_) {
        if (!a.law.no_extinction()) return false;
    }
    return true;
}

bool EnvironmentModel::all_fractional_linear() const {
    for (const auto& a : atoms_) {
        if (!a.law.fractional_linear()) return false;
    }
    return true;
}

EnvironmentModel EnvironmentModel::reweighted(std::span<const double> weights) const {
    if (weights.size() != atoms_.size()) {
        throw Error(ErrorKind::DimensionMismatch, "weight count does not match atom count");
    }
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    std::vector<EnvironmentAtom> atoms = atoms_;
    for (std::size_t e = 0; e < atoms.size(); ++e) atoms[e].weight = weights[e] / total;
    return EnvironmentModel(std::move(atoms));
}

double env_moment_m(const EnvironmentModel& env, double s) {
    if (s < 0.0) {
        for (const auto& a : env.atoms()) {
            if (a.law.mean() == 0.0) {
                throw Error(ErrorKind::ZeroMean, "negative moment of a zero-mean atom");
            }
        }
    }
    return env.expectation([s](const OffspringLaw& law) { return std::pow(law.mean(), s); });
}

double gamma_k(const EnvironmentModel& env, int k) {
    return env.expectation([k](const OffspringLaw& law) { return std::pow(law.p(1), k); });
}

double env_log_mean(const EnvironmentModel& env) {
    return env.expectation([](const OffspringLaw& law) { return std::log(law.mean()); });
}

double prob_unit_mean(const EnvironmentModel& env) {
    return env.expectation([](const OffspringLaw& law) { return law.mean() == 1.0 ? 1.0 : 0.0; });
}

double env_p1k_moment(const EnvironmentModel& env, int k, double a) {
    return env.expectation([k, a](const OffspringLaw& law) {
        const double p1 = law.p(1);
        // 0 * inf would poison the sum when m^a overflows
        return p1 == 0.0 ? 0.0 : std::pow(p1, k) * std::pow(law.mean(), a);
    });
}

}  // namespace bpre
