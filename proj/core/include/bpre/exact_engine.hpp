#pragma once

#include <cstddef>
#include <ostream>
#include <span>
#include <vector>

#include "bpre/environment.hpp"

namespace bpre {

/// Annealed one-step kernel p(i, j) = P(Z_1 = j | Z_0 = i) on states 0..J.
///
/// Row i is the weighted mixture over atoms of the i-fold convolution power of the atom pmf,
/// cut at J. Each row is stored as a band [first(i), first(i) + row(i).size()); entries outside
/// the band are exactly zero. Mass that lands above J is kept in row_deficit(i).
class TransitionKernel {
public:
    std::size_t truncation() const { return rows_.size() - 1; }

    std::size_t first(std::size_t i) const { return first_[i]; }
    std::span<const double> row(std::size_t i) const { return rows_[i]; }
    double row_deficit(std::size_t i) const { return deficit_[i]; }

    /// p(i, j), zero outside the stored band.
    double operator()(std::size_t i, std::size_t j) const;

private:
    friend TransitionKernel build_kernel(const EnvironmentModel& env, std::size_t truncation);

    std::vector<std::size_t> first_;
    std::vector<std::vector<double>> rows_;
    std::vector<double> deficit_;
};

TransitionKernel build_kernel(const EnvironmentModel& env, std::size_t truncation);

/// Law of Z_n under P_k on states 0..J plus the mass P_k(Z_n > J) that escaped the truncation.
struct DistributionVector {
    int n = 0;
    int k = 1;
    std::vector<double> probs;
    double deficit = 0.0;

    std::size_t truncation() const { return probs.size() - 1; }
    double prob(std::size_t j) const { return j < probs.size() ? probs[j] : 0.0; }
};

/// Point mass at k, generation 0.
DistributionVector initial_distribution(int k, std::size_t truncation);

DistributionVector propagate(const TransitionKernel& kernel, const DistributionVector& dist);

/// Law of Z_n from Z_0 = k, truncated at J.
DistributionVector exact_dist(const EnvironmentModel& env, int k, int n, std::size_t truncation);

/// Every generation 0..n from a single kernel build.
std::vector<DistributionVector> exact_dist_history(const EnvironmentModel& env, int k, int n,
                                                   std::size_t truncation);

/// max(200, k * ceil(E m0)^n) capped at 5000.
std::size_t default_truncation(const EnvironmentModel& env, int k, int n);

struct BoundedValue {
    double value;
    double tail_bound;
};

/// G_{k,n}(t) = sum_j probs(j) t^j; tail_bound = deficit * t^(J+1). Requires t in [0, 1).
BoundedValue gen_func(const DistributionVector& dist, double t);

struct Interval {
    double lower;
    double upper;
};

/// Bounds on E_k Z_n^{-r}. Throws ExtinctionMass if probs(0) > 0.
Interval harmonic_moment_Zn(const DistributionVector& dist, double r);

/// CSV `n,j,prob` for every j with nonzero probability, followed by a `n,deficit,<value>` row.
void write_distribution_csv(std::ostream& out, const DistributionVector& dist);

/// One generation of a simulated path. w = z / (k * pi), so w = 1 at generation 0.
struct Generation {
    double z;
    double pi;
    double w;
};

struct Trajectory {
    int k = 1;
    std::vector<Generation> generations;
    /// Some generation used the Gaussian approximation for offspring-class counts.
    bool gaussian = false;
    /// The population overflowed 64-bit integers and continued in floating point.
    bool approximate = false;
};

}  // namespace bpre
