#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bpre/environment.hpp"
#include "bpre/exact_engine.hpp"

namespace bpre {

struct SimConfig {
    std::uint64_t seed = 1;
    std::int64_t n_paths = 100000;
    int n_gens = 25;
    /// Populations above this size draw offspring-class counts from the Gaussian approximation.
    std::int64_t exact_pop_threshold = 1000000;
    int k = 1;
    std::optional<double> tilt_r;
    /// 0 selects std::thread::hardware_concurrency(). Results do not depend on this.
    unsigned threads = 0;

    void validate() const;
};

enum class EstimateMethod { Plain, Tilted };

std::string_view to_string(EstimateMethod method) noexcept;

struct EstimateWithCI {
    double point = 0.0;
    double std_error = 0.0;
    std::int64_t n_effective = 0;
    EstimateMethod method = EstimateMethod::Plain;

    double sample_variance() const {
        return std_error * std_error * static_cast<double>(n_effective);
    }
};

/// Per-path random stream derived statelessly from (seed, path index).
std::mt19937_64 path_rng(std::uint64_t seed, std::uint64_t path_index);

/// One quenched path of N generations from Z_0 = k. Each generation draws an atom from the
/// environment weights, then the offspring-class histogram of the current population by
/// chained binomials (Gaussian approximation above `exact_pop_threshold`).
Trajectory simulate_path(const EnvironmentModel& env, int k, int n_gens, std::mt19937_64& rng,
                         std::int64_t exact_pop_threshold = 1000000);

/// Runs `cfg.n_paths` paths in parallel; `observe(trajectory, out)` writes `width` values per
/// path. Row p of the result belongs to path p whatever the thread count.
/// `weights` overrides the atom weights used to draw environments (tilted simulation).
std::vector<double> run_paths(const EnvironmentModel& env, const SimConfig& cfg, std::size_t width,
                              const std::function<void(const Trajectory&, std::span<double>)>& observe,
                              std::span<const double> weights = {});

/// Mean and standard error of column `col` of a row-major sample matrix, by pairwise summation.
EstimateWithCI summarize(std::span<const double> samples, std::size_t width, std::size_t col,
                         EstimateMethod method = EstimateMethod::Plain);

/// W_N samples, one per path.
std::vector<double> sample_W(const EnvironmentModel& env, const SimConfig& cfg);

struct HarmonicEstimate {
    EstimateWithCI estimate;  // at N = cfg.n_gens
    std::vector<std::pair<int, EstimateWithCI>> trend;  // N/4, N/2, N
};

/// E_k W^{-a} through the proxy W_N, with the nested-N trend used to spot divergence.
HarmonicEstimate estimate_harmonic_moment_W(const EnvironmentModel& env, double a,
                                            const SimConfig& cfg);

/// phi_k(t) = E_k exp(-t W) through W_N.
EstimateWithCI estimate_laplace(const EnvironmentModel& env, double t, const SimConfig& cfg);

/// Laplace estimates for several t from the same paths (common random numbers).
std::vector<EstimateWithCI> estimate_laplace(const EnvironmentModel& env, std::span<const double> ts,
                                             const SimConfig& cfg);

/// E_k Z_n^{-r} by plain simulation.
EstimateWithCI plain_harmonic_Zn(const EnvironmentModel& env, double r, int n, const SimConfig& cfg);

/// E_k Z_n^{-r} = c_r^n E^{(r)}_k[(Z_n / Pi_n)^{-r}], simulating environments with weights
/// w_e m_e^{-r} / c_r. Offspring draws inside an atom are not tilted.
EstimateWithCI tilted_harmonic_Zn(const EnvironmentModel& env, double r, int n, const SimConfig& cfg);

}  // namespace bpre
