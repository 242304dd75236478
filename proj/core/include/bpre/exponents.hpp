#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bpre/environment.hpp"

namespace bpre {

enum class Regime { Strong, Intermediate, Weak };

std::string_view to_string(Regime regime) noexcept;

/// r with E m0^{-r} = gamma_k, by bisection to 1e-12.
/// NoRoot when gamma_k <= P(m0 = 1) (the infimum of r -> E m0^{-r}); Degenerate when
/// gamma_k is not in (0, 1).
double solve_r_k(const EnvironmentModel& env, int k);

/// Critical harmonic-moment exponent: a with E[p1^k m0^a] = 1, by bisection to 1e-12.
/// NoRoot when the map stays below one up to a = 1e6.
double solve_a_k(const EnvironmentModel& env, int k);

/// Lower bound p / (1 - log E m0^p / log gamma_k); equals p when gamma_k = 0.
double alpha_k(const EnvironmentModel& env, int k, double p);

/// E_k W^{-a} < infinity  <=>  E[p1^k m0^a] < 1.
bool moment_criterion(const EnvironmentModel& env, int k, double a);

/// Minimizer and minimum of the convex map lambda -> E m0^{-lambda} over lambda >= 0.
struct TiltMinimum {
    double lambda;
    double value;
};
TiltMinimum minimize_tilt(const EnvironmentModel& env);

struct RateReport {
    Regime regime;
    double drift;  // E[X e^{-X}], X = log m0
    double rho;
    std::optional<double> lambda;  // minimizer in the weak regime
};

/// Regime and decay rate rho for an environment of fractional-linear atoms, using the
/// closed-form means (1 - a0) / (1 - b0). Throws NotFractionalLinear / NotSupercritical.
RateReport classify_and_rho(const EnvironmentModel& env);

struct ExponentReport {
    int k = 1;
    double gamma_k = 0.0;
    double mu = 0.0;
    std::optional<double> r_k;
    std::string r_k_unsolvable_reason;
    std::optional<double> a_k;
    std::string a_k_unsolvable_reason;
    double alpha_k = 0.0;
    double alpha_p = 1.0;
    std::vector<std::pair<double, double>> c_r;  // (r, E m0^{-r})
    std::optional<RateReport> rate;
    std::string rate_unsolvable_reason;
};

/// Throws NotSupercritical when mu <= 0. Unsolvable pieces are reported, not thrown.
ExponentReport exponent_report(const EnvironmentModel& env, int k, double alpha_p = 1.0,
                               std::span<const double> c_r_orders = {});

std::string exponent_report_json(const ExponentReport& report);

}  // namespace bpre
