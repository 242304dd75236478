#include "bpre/exponents.hpp"

#include <cmath>
#include <limits>

#include "bpre/report.hpp"
#include "json.hpp"

namespace bpre {

namespace {

constexpr double kRootTol = 1e-12;
constexpr double kLambdaTol = 1e-10;
constexpr double kBracketCap = 1e6;
constexpr double kRegimeTol = 1e-14;

// Bisection on [lo, hi] where below(lo) holds and below(hi) does not.
template <typename Pred>
double bisect(Pred below, double lo, double hi) {
    while (hi - lo > kRootTol) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (below(mid) ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

double tilt_derivative(const EnvironmentModel& env, double lambda) {
    return -env.expectation([lambda](const OffspringLaw& law) {
        return std::log(law.mean()) * std::pow(law.mean(), -lambda);
    });
}

// Golden-section search for the minimum of a unimodal f on [lo, hi].
template <typename F>
TiltMinimum golden_min(F f, double lo, double hi) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - inv_phi * (hi - lo);
    double x2 = lo + inv_phi * (hi - lo);
    double f1 = f(x1);
    double f2 = f(x2);
    while (hi - lo > kLambdaTol) {
        if (f1 <= f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    const double x = 0.5 * (lo + hi);
    return {x, f(x)};
}

struct MeanAtom {
    double weight;
    double mean;
};

}  // namespace

std::string_view to_string(Regime regime) noexcept {
    switch (regime) {
        case Regime::Strong: return "Strong";
        case Regime::Intermediate: return "Intermediate";
        case Regime::Weak: return "Weak";
    }
    return "Unknown";
}

TiltMinimum minimize_tilt(const EnvironmentModel& env) {
    auto c = [&env](double lambda) { return env_moment_m(env, -lambda); };
    if (tilt_derivative(env, 0.0) >= 0.0) return {0.0, 1.0};

    double hi = 1.0;
    while (tilt_derivative(env, hi) < 0.0) {
        hi *= 2.0;
        if (hi > kBracketCap) {
            // decreasing for ever: infimum is the mass of unit-mean atoms
            return {std::numeric_limits<double>::infinity(), prob_unit_mean(env)};
        }
    }
    return golden_min(c, 0.0, hi);
}

double solve_r_k(const EnvironmentModel& env, int k) {
    const double gk = gamma_k(env, k);
    if (!(gk > 0.0 && gk < 1.0)) {
        throw Error(ErrorKind::Degenerate, "gamma_k = " + format_double(gk) + " not in (0, 1)");
    }
    auto c = [&env](double r) { return env_moment_m(env, -r); };

    bool all_at_least_one = true;
    for (const auto& a : env.atoms()) all_at_least_one = all_at_least_one && a.law.mean() >= 1.0;

    double lo = 0.0;
    double hi = 1.0;
    if (all_at_least_one) {
        const double floor = prob_unit_mean(env);
        if (gk <= floor) {
            throw Error(ErrorKind::NoRoot, "gamma_k = " + format_double(gk) +
                                               " <= P(m0 = 1) = " + format_double(floor));
        }
        while (c(hi) >= gk) {
            lo = hi;
            hi *= 2.0;
            if (hi > kBracketCap) throw Error(ErrorKind::NoRoot, "r_k bracket exceeded 1e6");
        }
    } else {
        // E m0^{-r} is convex and eventually increasing; the root lies left of the minimum
        const auto min = minimize_tilt(env);
        if (min.value >= gk) {
            throw Error(ErrorKind::NoRoot, "min_r E m0^{-r} = " + format_double(min.value) +
                                               " >= gamma_k");
        }
        hi = min.lambda;
    }
    return bisect([&](double r) { return c(r) >= gk; }, lo, hi);
}

double solve_a_k(const EnvironmentModel& env, int k) {
    const double gk = gamma_k(env, k);
    if (!(gk > 0.0 && gk < 1.0)) {
        throw Error(ErrorKind::Degenerate, "gamma_k = " + format_double(gk) + " not in (0, 1)");
    }
    bool can_grow = false;
    for (const auto& a : env.atoms()) can_grow = can_grow || (a.law.p(1) > 0.0 && a.law.mean() > 1.0);
    if (!can_grow) {
        throw Error(ErrorKind::NoRoot, "no atom with p1 > 0 and m0 > 1; E[p1^k m0^a] stays below 1");
    }
    auto h = [&env, k](double a) { return env_p1k_moment(env, k, a); };
    double lo = 0.0;
    double hi = 1.0;
    while (h(hi) < 1.0) {
        lo = hi;
        hi *= 2.0;
        if (hi > kBracketCap) throw Error(ErrorKind::NoRoot, "a_k bracket exceeded 1e6");
    }
    return bisect([&](double a) { return h(a) < 1.0; }, lo, hi);
}

double alpha_k(const EnvironmentModel& env, int k, double p) {
    if (!(p > 0.0)) throw Error(ErrorKind::DomainError, "alpha_k needs p > 0");
    const double gk = gamma_k(env, k);
    if (gk >= 1.0) throw Error(ErrorKind::Degenerate, "gamma_k = 1");
    if (gk == 0.0) return p;
    return p / (1.0 - std::log(env_moment_m(env, p)) / std::log(gk));
}

bool moment_criterion(const EnvironmentModel& env, int k, double a) {
    if (!(a > 0.0)) throw Error(ErrorKind::DomainError, "moment order must be positive");
    return env_p1k_moment(env, k, a) < 1.0;
}

RateReport classify_and_rho(const EnvironmentModel& env) {
    if (!env.all_fractional_linear()) {
        throw Error(ErrorKind::NotFractionalLinear, "rho needs every atom to be fractional linear");
    }
    std::vector<MeanAtom> means;
    double mu = 0.0;
    for (const auto& a : env.atoms()) {
        const double m = a.law.fractional_linear()->closed_form_mean();
        means.push_back({a.weight, m});
        mu += a.weight * std::log(m);
    }
    if (!(mu > 0.0)) {
        throw Error(ErrorKind::NotSupercritical, "E log m0 = " + format_double(mu));
    }

    double drift = 0.0;
    double inv_mean = 0.0;
    for (const auto& m : means) {
        drift += m.weight * std::log(m.mean) / m.mean;
        inv_mean += m.weight / m.mean;
    }

    RateReport out;
    out.drift = drift;
    if (drift >= -kRegimeTol) {
        out.regime = std::abs(drift) <= kRegimeTol ? Regime::Intermediate : Regime::Strong;
        out.rho = -std::log(inv_mean);
        return out;
    }

    // weak regime: minimize lambda -> sum w m^{-lambda}; the minimizer lies in (0, 1)
    auto c = [&means](double lambda) {
        double acc = 0.0;
        for (const auto& m : means) acc += m.weight * std::pow(m.mean, -lambda);
        return acc;
    };
    const auto min = golden_min(c, 0.0, 1.0);
    out.regime = Regime::Weak;
    out.lambda = min.lambda;
    out.rho = -std::log(min.value);
    return out;
}

ExponentReport exponent_report(const EnvironmentModel& env, int k, double alpha_p,
                               std::span<const double> c_r_orders) {
    if (k < 1) throw Error(ErrorKind::BadParams, "k must be >= 1");
    ExponentReport rep;
    rep.k = k;
    rep.mu = env_log_mean(env);
    if (!(rep.mu > 0.0)) {
        throw Error(ErrorKind::NotSupercritical, "E log m0 = " + format_double(rep.mu));
    }
    rep.gamma_k = gamma_k(env, k);
    try {
        rep.r_k = solve_r_k(env, k);
    } catch (const Error& e) {
        rep.r_k_unsolvable_reason = e.what();
    }
    try {
        rep.a_k = solve_a_k(env, k);
    } catch (const Error& e) {
        rep.a_k_unsolvable_reason = e.what();
    }
    rep.alpha_p = alpha_p;
    rep.alpha_k = alpha_k(env, k, alpha_p);
    for (const double r : c_r_orders) rep.c_r.emplace_back(r, env_moment_m(env, -r));
    try {
        rep.rate = classify_and_rho(env);
    } catch (const Error& e) {
        rep.rate_unsolvable_reason = e.what();
    }
    return rep;
}

std::string exponent_report_json(const ExponentReport& rep) {
    using nlohmann::ordered_json;
    auto opt = [](const std::optional<double>& v) -> ordered_json {
        return v ? ordered_json(*v) : ordered_json(nullptr);
    };
    ordered_json doc;
    doc["k"] = rep.k;
    doc["gamma_k"] = rep.gamma_k;
    doc["mu"] = rep.mu;
    doc["r_k"] = opt(rep.r_k);
    doc["a_k"] = opt(rep.a_k);
    doc["alpha_k"] = rep.alpha_k;
    doc["alpha_p"] = rep.alpha_p;
    auto& cr = doc["c_r"] = ordered_json::array();
    for (const auto& [r, c] : rep.c_r) cr.push_back({{"r", r}, {"c", c}});
    if (rep.rate) {
        doc["regime"] = std::string(to_string(rep.rate->regime));
        doc["rho"] = rep.rate->rho;
        doc["drift"] = rep.rate->drift;
        doc["lambda"] = opt(rep.rate->lambda);
    } else {
        doc["regime"] = "NotApplicable";
        doc["rho"] = nullptr;
        doc["drift"] = nullptr;
        doc["lambda"] = nullptr;
    }
    auto& why = doc["unsolvable_reason"] = ordered_json::object();
    if (!rep.r_k_unsolvable_reason.empty()) why["r_k"] = rep.r_k_unsolvable_reason;
    if (!rep.a_k_unsolvable_reason.empty()) why["a_k"] = rep.a_k_unsolvable_reason;
    if (!rep.rate_unsolvable_reason.empty()) why["rho"] = rep.rate_unsolvable_reason;
    return doc.dump(2);
}

}  // namespace bpre
