#include "bpre/verification.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "bpre/exact_engine.hpp"
#include "bpre/exponents.hpp"
#include "bpre/montecarlo.hpp"
#include "bpre/qseries.hpp"
#include "bpre/report.hpp"

namespace bpre {

namespace fixtures {

EnvironmentModel env_e1() {
    std::vector<EnvironmentAtom> atoms;
    atoms.push_back({0.5, make_offspring_law({0.0, 0.5, 0.5})});
    atoms.push_back({0.5, make_offspring_law({0.0, 0.2, 0.8})});
    return EnvironmentModel(std::move(atoms));
}

EnvironmentModel gw_half() { return EnvironmentModel::single(make_offspring_law({0.0, 0.5, 0.5})); }

EnvironmentModel single_half_mean_two() {
    return EnvironmentModel::single(make_offspring_law({0.0, 0.5, 0.0, 0.5}));
}

EnvironmentModel fractional_linear(double a0, double b0) {
    return EnvironmentModel::single(fractional_linear_law({a0, b0, 0}));
}

}  // namespace fixtures

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
    bool passed;
    std::string detail;
};

CheckResult timed(std::string id, std::string description, double limit,
                  const std::function<Outcome()>& body) {
    CheckResult res;
    res.id = std::move(id);
    res.description = std::move(description);
    res.time_limit = limit;
    const auto start = Clock::now();
    Outcome out{false, ""};
    try {
        out = body();
    } catch (const std::exception& e) {
        out = {false, std::string("exception: ") + e.what()};
    }
    res.seconds = std::chrono::duration<double>(Clock::now() - start).count();
    res.passed = out.passed && res.seconds < limit;
    res.detail = out.detail;
    if (out.passed && res.seconds >= limit) res.detail += " [over time limit]";
    return res;
}

std::string fmt(double x) { return format_double(x); }

const std::vector<double>& t_grid() {
    static const std::vector<double> grid{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7};
    return grid;
}

EnvironmentModel pick(const VerifyOptions& o, EnvironmentModel fallback) {
    return o.env ? *o.env : std::move(fallback);
}

SimConfig mc_config(const VerifyOptions& o, std::int64_t paths, int gens) {
    SimConfig cfg;
    cfg.seed = o.seed;
    cfg.n_paths = paths;
    cfg.n_gens = gens;
    cfg.threads = o.threads;
    return cfg;
}

CheckResult decay_identity(const VerifyOptions& o) {
    return timed("decay-identity", "P_k(Z_n = k) = gamma_k^n, k in {1,2}, n <= 20", 1.0, [&] {
        const auto env = pick(o, fixtures::env_e1());
        double worst = 0.0;
        for (int k : {1, 2}) {
            const double gk = gamma_k(env, k);
            const auto hist = exact_dist_history(env, k, 20, 200);
            for (int n = 0; n <= 20; ++n) {
                const double expected = std::pow(gk, n);
                const double got = hist[static_cast<std::size_t>(n)].prob(static_cast<std::size_t>(k));
                worst = std::max(worst, std::abs(got - expected) / expected);
            }
        }
        return Outcome{worst < 1e-12, "max relative error " + fmt(worst) + " (< 1e-12)"};
    });
}

CheckResult monotone_ratio(const VerifyOptions& o) {
    return timed("monotone-ratio", "a_{k,n}(j) nondecreasing in n, j <= 10, n <= 40", 5.0, [&] {
        const auto env = pick(o, fixtures::env_e1());
        constexpr std::size_t j_max = 10;
        constexpr int n_max = 40;
        double worst_drop = 0.0;
        int checked = 0;
        for (int k : {1, 2}) {
            const double gk = gamma_k(env, k);
            const std::size_t truncation = env.no_extinction() ? j_max : 400;
            const auto hist = exact_dist_history(env, k, n_max, truncation);
            const auto kernel = build_kernel(env, truncation);
            const auto reach = accessible_states(kernel, k);
            for (std::size_t j = static_cast<std::size_t>(k); j <= j_max; ++j) {
                if (!reach[j]) continue;
                ++checked;
                for (int n = 0; n < n_max; ++n) {
                    const double a0 = hist[static_cast<std::size_t>(n)].prob(j) / std::pow(gk, n);
                    const double a1 = hist[static_cast<std::size_t>(n) + 1].prob(j) / std::pow(gk, n + 1);
                    worst_drop = std::max(worst_drop, a0 - a1);
                }
            }
        }
        return Outcome{worst_drop <= 1e-12 && checked > 0,
                       std::to_string(checked) + " accessible (k, j) pairs; largest decrease " +
                           fmt(worst_drop) + " (<= 1e-12)"};
    });
}

CheckResult recurrence(const VerifyOptions& o) {
    return timed("recurrence", "q-table recurrence residual, k = 1, J = 400", 10.0, [&] {
        const auto env = pick(o, fixtures::env_e1());
        const auto kernel = build_kernel(env, 400);
        const auto qt = q_table(env, kernel, 1);
        const double res = recurrence_residual(qt, kernel);
        return Outcome{res < 1e-10, "max residual " + fmt(res) + " (< 1e-10)"};
    });
}

CheckResult convergence(const VerifyOptions& o) {
    return timed("convergence", "|a_{1,60}(j) - q_{1,j}| / q_{1,j} < 1% for accessible j <= 8", 10.0, [&] {
        const auto env = pick(o, fixtures::env_e1());
        constexpr std::size_t j_max = 8;
        const auto kernel = build_kernel(env, j_max);
        const auto qt = q_table(env, kernel, 1);
        const auto reach = accessible_states(kernel, 1);
        const auto dist = exact_dist(env, 1, 60, j_max);
        const double g60 = std::pow(qt.gamma, 60);
        double worst = 0.0;
        for (std::size_t j = 1; j <= j_max; ++j) {
            if (!reach[j]) continue;
            worst = std::max(worst, std::abs(dist.prob(j) / g60 - qt.at(j)) / qt.at(j));
        }
        return Outcome{worst < 0.01, "max relative gap " + fmt(worst) + " (< 0.01)"};
    });
}

CheckResult functional_eq(const VerifyOptions& o) {
    return timed("functional-eq", "gamma_1 Q_1(t) = E Q_1(f0(t)), t in 0.1..0.7", 30.0, [&] {
        const auto env = pick(o, fixtures::env_e1());
        const auto r400 = functional_eq_residual(q_table(env, 1, 400), env, t_grid());
        const auto r800 = functional_eq_residual(q_table(env, 1, 800), env, t_grid());
        double fp_allowance = 0.0;
        for (const auto& e : r800.entries) fp_allowance = std::max(fp_allowance, e.tolerance);
        const bool weak_shrink = r800.max_residual <= r400.max_residual + fp_allowance;
        // at small J the truncation error dominates rounding and must strictly drop
        const auto r20 = functional_eq_residual(q_table(env, 1, 20), env, t_grid());
        const auto r40 = functional_eq_residual(q_table(env, 1, 40), env, t_grid());
        const bool strict_shrink = r40.max_residual < r20.max_residual;
        std::ostringstream detail;
        detail << "J=400 residual " << fmt(r400.max_residual) << " within tolerance: "
               << (r400.within_tolerance ? "yes" : "no") << "; J=800 residual " << fmt(r800.max_residual)
               << "; J=20 -> 40: " << fmt(r20.max_residual) << " -> " << fmt(r40.max_residual);
        return Outcome{r400.within_tolerance && r800.within_tolerance && weak_shrink && strict_shrink,
                       detail.str()};
    });
}

CheckResult gw_product(const VerifyOptions& o) {
    return timed("gw-product", "Q_k = Q_1^k for Galton-Watson, violated for a random environment", 30.0, [&] {
        auto max_gap = [](const EnvironmentModel& env, int k) {
            const auto kernel = build_kernel(env, 400);
            const auto q1 = q_table(env, kernel, 1);
            const auto qk = q_table(env, kernel, k);
            double worst = 0.0;
            for (const double t : t_grid()) {
                worst = std::max(worst, std::abs(Q_eval(qk, t).value - std::pow(Q_eval(q1, t).value, k)));
            }
            return worst;
        };
        std::ostringstream detail;
        bool ok = true;
        if (o.env) {
            const bool single = o.env->size() == 1;
            for (int k : {2, 3}) {
                const double gap = max_gap(*o.env, k);
                ok = ok && (single ? gap < 1e-8 : gap > 1e-4);
                detail << "k=" << k << " gap " << fmt(gap) << (single ? " (< 1e-8) " : " (> 1e-4) ");
            }
            return Outcome{ok, detail.str()};
        }
        const auto gw = fixtures::gw_half();
        for (int k : {2, 3}) {
            const double gap = max_gap(gw, k);
            ok = ok && gap < 1e-8;
            detail << "GW k=" << k << " gap " << fmt(gap) << " (< 1e-8); ";
        }
        const double e1_gap = max_gap(fixtures::env_e1(), 2);
        ok = ok && e1_gap > 1e-4;
        detail << "E1 k=2 gap " << fmt(e1_gap) << " (> 1e-4)";
        return Outcome{ok, detail.str()};
    });
}

CheckResult series_moment_identity(const VerifyOptions& o) {
    return timed("series-moment", "sum j^{-r} q_{1,j} vs E_1 Z_60^{-r} / gamma_1^60, r = r_1 + 1", 30.0, [&] {
        const auto env = pick(o, fixtures::env_e1());
        const double r = solve_r_k(env, 1) + 1.0;
        const auto kernel = build_kernel(env, 400);
        const auto qt = q_table(env, kernel, 1);
        const double series = series_moment(qt, r);
        auto dist = initial_distribution(1, 400);
        for (int n = 0; n < 60; ++n) dist = propagate(kernel, dist);
        const double moment = harmonic_moment_Zn(dist, r).lower / std::pow(qt.gamma, 60);
        const double rel = std::abs(series - moment) / moment;
        return Outcome{rel < 0.01, "series " + fmt(series) + ", normalized moment " + fmt(moment) +
                                       ", relative gap " + fmt(rel) + " (< 0.01)"};
    });
}

CheckResult closed_form(const VerifyOptions&) {
    return timed("closed-form", "r_1 = a_1 = 1 for p1 = 0.5, m = 2; FL(0, 0.5) strong with rho = ln 2", 5.0, [] {
        const auto single = fixtures::single_half_mean_two();
        const double r1 = solve_r_k(single, 1);
        const double a1 = solve_a_k(single, 1);
        const auto fl = fixtures::fractional_linear(0.0, 0.5);
        const auto rate = classify_and_rho(fl);
        const double ln2 = std::numbers::ln2;
        const auto dist = exact_dist(fl, 1, 30, 200);
        const double slope = -std::log(dist.prob(1)) / 30.0;
        const bool ok = std::abs(r1 - 1.0) < 1e-10 && std::abs(a1 - 1.0) < 1e-10 &&
                        rate.regime == Regime::Strong && std::abs(rate.rho - ln2) < 1e-10 &&
                        std::abs(slope - rate.rho) / rate.rho < 0.01;
        std::ostringstream detail;
        detail << "r_1 " << fmt(r1) << ", a_1 " << fmt(a1) << ", regime " << to_string(rate.regime)
               << ", rho " << fmt(rate.rho) << ", exact slope " << fmt(slope);
        return Outcome{ok, detail.str()};
    });
}

std::vector<CheckResult> mc_fidelity(const VerifyOptions& o) {
    const auto env = pick(o, fixtures::env_e1());
    std::vector<CheckResult> out;
    out.push_back(timed("mc-fidelity/tv", "TV(empirical Z_10, exact) < 0.01 at 1e5 paths", 60.0, [&] {
        constexpr std::size_t truncation = 500;
        const auto exact = exact_dist(env, 1, 10, truncation);
        const auto cfg = mc_config(o, 100000, 10);
        const auto z = run_paths(env, cfg, 1, [](const Trajectory& t, std::span<double> v) {
            v[0] = t.generations.back().z;
        });
        std::vector<double> counts(truncation + 2, 0.0);
        for (const double zi : z) counts[std::min<std::size_t>(static_cast<std::size_t>(zi), truncation + 1)] += 1.0;
        const double n = static_cast<double>(z.size());
        double tv = 0.0;
        for (std::size_t j = 0; j <= truncation; ++j) tv += std::abs(counts[j] / n - exact.probs[j]);
        tv += std::abs(counts[truncation + 1] / n - exact.deficit);
        tv *= 0.5;
        return Outcome{tv < 0.01, "TV " + fmt(tv) + " (< 0.01)"};
    }));
    out.push_back(timed("mc-fidelity/martingale", "mean W_25 within 1 +/- 4 SE at 1e5 paths", 60.0, [&] {
        const auto cfg = mc_config(o, 100000, 25);
        const auto w = sample_W(env, cfg);
        const auto est = summarize(w, 1, 0);
        const bool ok = std::abs(est.point - 1.0) <= 4.0 * est.std_error;
        return Outcome{ok, "mean " + fmt(est.point) + ", SE " + fmt(est.std_error)};
    }));
    return out;
}

CheckResult threshold_detector(const VerifyOptions& o) {
    return timed("threshold", "E W^{-a} stable at a = a_1/2, growing at a = 1.5 a_1 (N = 10, 20, 40)", 120.0, [&] {
        const auto env = pick(o, fixtures::env_e1());
        const double a1 = solve_a_k(env, 1);
        const auto cfg = mc_config(o, 100000, 40);
        const auto low = estimate_harmonic_moment_W(env, 0.5 * a1, cfg);
        const auto high = estimate_harmonic_moment_W(env, 1.5 * a1, cfg);
        const double r1 = low.trend[1].second.point / low.trend[0].second.point;
        const double r2 = low.trend[2].second.point / low.trend[1].second.point;
        const double growth = high.trend[2].second.point / high.trend[0].second.point;
        const bool stable = r1 >= 0.9 && r1 <= 1.1 && r2 >= 0.9 && r2 <= 1.1;
        std::ostringstream detail;
        detail << "a_1 " << fmt(a1) << "; below: ratios " << fmt(r1) << ", " << fmt(r2)
               << " (in [0.9, 1.1]); above: last/first " << fmt(growth) << " (> 1.5)";
        return Outcome{stable && growth > 1.5, detail.str()};
    });
}

std::vector<CheckResult> tilted(const VerifyOptions& o) {
    const auto env = pick(o, fixtures::env_e1());
    std::vector<CheckResult> out;
    out.push_back(timed("tilted/exact", "tilted E_1 Z_8^{-1} within 3 SE of the exact value", 120.0, [&] {
        const std::size_t truncation = std::max<std::size_t>(256, default_truncation(env, 1, 8));
        const auto exact = harmonic_moment_Zn(exact_dist(env, 1, 8, truncation), 1.0);
        const auto est = tilted_harmonic_Zn(env, 1.0, 8, mc_config(o, 100000, 8));
        const double gap = std::abs(est.point - exact.lower);
        const double slack = exact.upper - exact.lower;
        return Outcome{gap <= 3.0 * est.std_error + slack,
                       "estimate " + fmt(est.point) + " +/- " + fmt(est.std_error) + ", exact " +
                           fmt(exact.lower)};
    }));
    out.push_back(timed("tilted/variance", "tilted variance below plain at n = 15, r = r_1 + 1", 120.0, [&] {
        const double r = solve_r_k(env, 1) + 1.0;
        const auto cfg = mc_config(o, 100000, 15);
        const auto t = tilted_harmonic_Zn(env, r, 15, cfg);
        const auto p = plain_harmonic_Zn(env, r, 15, cfg);
        return Outcome{t.sample_variance() < p.sample_variance(),
                       "tilted variance " + fmt(t.sample_variance()) + ", plain variance " +
                           fmt(p.sample_variance()) + " (estimates " + fmt(t.point) + " vs " +
                           fmt(p.point) + ")"};
    }));
    return out;
}

}  // namespace

std::vector<std::string> suite_names() {
    return {"decay-identity", "monotone-ratio", "recurrence", "convergence",
            "functional-eq",  "gw-product",     "series-moment", "closed-form",
            "mc-fidelity",    "threshold",      "tilted",        "all"};
}

std::vector<CheckResult> run_suite(std::string_view name, const VerifyOptions& options) {
    std::vector<CheckResult> out;
    auto add = [&out](std::vector<CheckResult> more) {
        out.insert(out.end(), std::make_move_iterator(more.begin()), std::make_move_iterator(more.end()));
    };
    const bool all = name == "all";
    bool matched = all;
    auto want = [&](std::string_view id) {
        if (all || name == id) {
            matched = true;
            return true;
        }
        return false;
    };
    if (want("decay-identity")) out.push_back(decay_identity(options));
    if (want("monotone-ratio")) out.push_back(monotone_ratio(options));
    if (want("recurrence")) out.push_back(recurrence(options));
    if (want("convergence")) out.push_back(convergence(options));
    if (want("functional-eq")) out.push_back(functional_eq(options));
    if (want("gw-product")) out.push_back(gw_product(options));
    if (want("series-moment")) out.push_back(series_moment_identity(options));
    if (want("closed-form")) out.push_back(closed_form(options));
    if (want("mc-fidelity")) add(mc_fidelity(options));
    if (want("threshold")) out.push_back(threshold_detector(options));
    if (want("tilted")) add(tilted(options));
    if (!matched) throw Error(ErrorKind::UnknownSuite, "no verification suite named '" + std::string(name) + "'");
    return out;
}

std::string format_check(const CheckResult& r) {
    std::ostringstream os;
    os << (r.passed ? "PASS" : "FAIL") << "  " << r.id << "  " << r.description << "  [" << r.detail
       << "; " << std::fixed << std::setprecision(3) << r.seconds << " s, limit " << r.time_limit << " s]";
    return os.str();
}

}  // namespace bpre
