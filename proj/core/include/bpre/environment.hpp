#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "bpre/error.hpp"

namespace bpre {

/// Parameters of a fractional-linear offspring law:
/// p_0 = a0, p_j = (1 - a0)(1 - b0) b0^(j-1) for j >= 1.
/// `max_offspring == 0` selects the smallest truncation whose geometric tail is below 1e-12.
struct FractionalLinearParams {
    double a0 = 0.0;
    double b0 = 0.5;
    std::size_t max_offspring = 0;

    /// Untruncated mean (1 - a0) / (1 - b0).
    double closed_form_mean() const { return (1.0 - a0) / (1.0 - b0); }
};

/// Offspring distribution of a single environment realization, with finite support 0..M.
class OffspringLaw {
public:
    std::span<const double> pmf() const { return pmf_; }
    double p(std::size_t i) const { return i < pmf_.size() ? pmf_[i] : 0.0; }
    std::size_t max_offspring() const { return pmf_.size() - 1; }
    double mean() const { return mean_; }
    bool no_extinction() const { return pmf_[0] == 0.0; }

    /// Set when the law was built by fractional_linear_law.
    const std::optional<FractionalLinearParams>& fractional_linear() const { return fl_; }

private:
    friend OffspringLaw make_offspring_law(std::vector<double> pmf);
    friend OffspringLaw fractional_linear_law(const FractionalLinearParams& params);

    OffspringLaw() = default;

    std::vector<double> pmf_;
    double mean_ = 0.0;
    std::optional<FractionalLinearParams> fl_;
};

/// Validates and normalizes a probability vector.
/// Entries in [-1e-15, 0) are clamped to zero; the sum must lie within 1e-9 of one.
/// Trailing zeros beyond the last positive entry are dropped.
OffspringLaw make_offspring_law(std::vector<double> pmf);

/// Generating function sum_i p_i t^i by Horner's rule. Throws DomainError outside [0, 1].
double gf_eval(const OffspringLaw& law, double t);

/// Fractional-linear law truncated at M with the tail mass beyond M folded into p_M.
OffspringLaw fractional_linear_law(const FractionalLinearParams& params);

/// Smallest M for which the fractional-linear tail (1 - a0) b0^M drops below `tail_tol`.
std::size_t fractional_linear_default_truncation(double a0, double b0, double tail_tol = 1e-12);

struct EnvironmentAtom {
    double weight;
    OffspringLaw law;
};

/// Finite i.i.d. environment: each generation draws one atom with the given weight.
class EnvironmentModel {
public:
    explicit EnvironmentModel(std::vector<EnvironmentAtom> atoms);

    /// Single-atom environment, i.e. a Galton-Watson process.
    static EnvironmentModel single(OffspringLaw law);

    std::span<const EnvironmentAtom> atoms() const { return atoms_; }
    std::size_t size() const { return atoms_.size(); }
    std::size_t max_offspring() const { return max_offspring_; }

    bool no_extinction() const;
    bool all_fractional_linear() const;

    /// Sum over atoms of weight * g(law).
    template <typename F>
    double expectation(F&& g) const {
        double acc = 0.0;
        for (const auto& a : atoms_) acc += a.weight * g(a.law);
        return acc;
    }

    /// Same environment with atom weights replaced; weights are renormalized.
    EnvironmentModel reweighted(std::span<const double> weights) const;

private:
    std::vector<EnvironmentAtom> atoms_;
    std::size_t max_offspring_ = 0;
};

template <typename F>
double env_expectation(const EnvironmentModel& env, F&& g) {
    return env.expectation(std::forward<F>(g));
}

/// E m0^s. Throws ZeroMean when s < 0 and some atom has mean zero.
double env_moment_m(const EnvironmentModel& env, double s);

/// gamma_k = E p1^k, the probability that k individuals have exactly k children.
double gamma_k(const EnvironmentModel& env, int k);

/// mu = E log m0 (nats). -inf when some atom has mean zero.
double env_log_mean(const EnvironmentModel& env);

/// P(m0 == 1).
double prob_unit_mean(const EnvironmentModel& env);

/// E[p1^k m0^a].
double env_p1k_moment(const EnvironmentModel& env, int k, double a);

}  // namespace bpre
