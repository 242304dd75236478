#include "bpre/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

namespace bpre {

namespace {

constexpr std::int64_t kMinThreshold = 1000;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Offspring total of `n` individuals, split into classes by chained binomials.
struct StepResult {
    long double total;
    bool gaussian;
};

StepResult draw_offspring_total(std::span<const double> pmf, double n_individuals, bool exact,
                                std::int64_t threshold, std::mt19937_64& rng) {
    const bool gaussian = !exact || n_individuals > static_cast<double>(threshold);
    std::size_t last = pmf.size() - 1;
    while (last > 0 && pmf[last] == 0.0) --last;

    long double total = 0.0L;
    double remaining_prob = 1.0;
    if (!gaussian) {
        auto remaining = static_cast<std::int64_t>(n_individuals);
        for (std::size_t i = 0; i <= last && remaining > 0; ++i) {
            std::int64_t count = remaining;
            if (i < last) {
                const double q = std::clamp(pmf[i] / remaining_prob, 0.0, 1.0);
                if (q < 1.0) count = std::binomial_distribution<std::int64_t>(remaining, q)(rng);
            }
            total += static_cast<long double>(i) * static_cast<long double>(count);
            remaining -= count;
            remaining_prob -= pmf[i];
        }
        return {total, false};
    }

    double remaining = n_individuals;
    for (std::size_t i = 0; i <= last && remaining > 0.0; ++i) {
        double count = remaining;
        if (i < last) {
            const double q = std::clamp(pmf[i] / remaining_prob, 0.0, 1.0);
            if (q < 1.0) {
                const double mean = remaining * q;
                const double sd = std::sqrt(remaining * q * (1.0 - q));
                count = sd > 0.0 ? std::round(std::normal_distribution<double>(mean, sd)(rng))
                                 : std::round(mean);
                count = std::clamp(count, 0.0, remaining);
            }
        }
        total += static_cast<long double>(i) * static_cast<long double>(count);
        remaining -= count;
        remaining_prob -= pmf[i];
    }
    return {total, true};
}

// Sum of f(0..n-1) by recursive halving; the tree depends only on n.
template <typename F>
double pairwise_sum(std::size_t begin, std::size_t end, const F& f) {
    const std::size_t len = end - begin;
    if (len <= 8) {
        double acc = 0.0;
        for (std::size_t i = begin; i < end; ++i) acc += f(i);
        return acc;
    }
    const std::size_t mid = begin + len / 2;
    return pairwise_sum(begin, mid, f) + pairwise_sum(mid, end, f);
}

void require_no_extinction(const EnvironmentModel& env) {
    if (!env.no_extinction()) {
        throw Error(ErrorKind::ExtinctionPossible, "estimator needs p0 = 0 on every atom");
    }
}

}  // namespace

void SimConfig::validate() const {
    if (n_paths < 1) throw Error(ErrorKind::BadParams, "n_paths must be >= 1");
    if (n_gens < 1) throw Error(ErrorKind::BadParams, "n_gens must be >= 1");
    if (exact_pop_threshold < kMinThreshold) {
        throw Error(ErrorKind::BadParams, "exact_pop_threshold must be >= 1000");
    }
    if (k < 1) throw Error(ErrorKind::BadParams, "k must be >= 1");
}

std::string_view to_string(EstimateMethod method) noexcept {
    return method == EstimateMethod::Tilted ? "tilted" : "plain";
}

std::mt19937_64 path_rng(std::uint64_t seed, std::uint64_t path_index) {
    return std::mt19937_64(splitmix64(splitmix64(seed) ^ splitmix64(~path_index)));
}

Trajectory simulate_path(const EnvironmentModel& env, int k, int n_gens, std::mt19937_64& rng,
                         std::int64_t exact_pop_threshold) {
    if (k < 1) throw Error(ErrorKind::BadParams, "k must be >= 1");
    if (n_gens < 0) throw Error(ErrorKind::BadParams, "n_gens must be >= 0");

    std::vector<double> weights;
    for (const auto& a : env.atoms()) weights.push_back(a.weight);
    std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());

    Trajectory traj;
    traj.k = k;
    traj.generations.reserve(static_cast<std::size_t>(n_gens) + 1);
    double z = k;
    double pi = 1.0;
    traj.generations.push_back({z, pi, 1.0});

    constexpr auto int_max = static_cast<long double>(std::numeric_limits<std::int64_t>::max());
    for (int g = 0; g < n_gens; ++g) {
        const auto& atom = env.atoms()[env.size() == 1 ? 0 : pick(rng)];
        if (z > 0.0) {
            const auto step = draw_offspring_total(atom.law.pmf(), z, !traj.approximate,
                                                   exact_pop_threshold, rng);
            traj.gaussian = traj.gaussian || step.gaussian;
            if (step.total > int_max) traj.approximate = true;
            z = static_cast<double>(step.total);
        }
        pi *= atom.law.mean();
        traj.generations.push_back({z, pi, z / (static_cast<double>(k) * pi)});
    }
    return traj;
}

std::vector<double> run_paths(const EnvironmentModel& env, const SimConfig& cfg, std::size_t width,
                              const std::function<void(const Trajectory&, std::span<double>)>& observe,
                              std::span<const double> weights) {
    cfg.validate();
    const EnvironmentModel sim_env = weights.empty() ? env : env.reweighted(weights);
    const auto n_paths = static_cast<std::size_t>(cfg.n_paths);
    std::vector<double> out(n_paths * width, 0.0);

    unsigned threads = cfg.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : cfg.threads;
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, n_paths));

    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&](std::size_t begin, std::size_t end) {
        try {
            for (std::size_t p = begin; p < end; ++p) {
                auto rng = path_rng(cfg.seed, p);
                const auto traj = simulate_path(sim_env, cfg.k, cfg.n_gens, rng, cfg.exact_pop_threshold);
                observe(traj, std::span<double>(out.data() + p * width, width));
            }
        } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
        }
    };

    if (threads <= 1) {
        work(0, n_paths);
    } else {
        std::vector<std::jthread> pool;
        const std::size_t chunk = (n_paths + threads - 1) / threads;
        for (unsigned t = 0; t < threads; ++t) {
            const std::size_t begin = t * chunk;
            const std::size_t end = std::min(n_paths, begin + chunk);
            if (begin < end) pool.emplace_back(work, begin, end);
        }
    }
    if (failure) std::rethrow_exception(failure);
    return out;
}

EstimateWithCI summarize(std::span<const double> samples, std::size_t width, std::size_t col,
                         EstimateMethod method) {
    const std::size_t n = samples.size() / width;
    EstimateWithCI est;
    est.method = method;
    est.n_effective = static_cast<std::int64_t>(n);
    if (n == 0) return est;
    const auto at = [&](std::size_t i) { return samples[i * width + col]; };
    const double mean = pairwise_sum(0, n, at) / static_cast<double>(n);
    est.point = mean;
    if (n > 1) {
        const double ss = pairwise_sum(0, n, [&](std::size_t i) {
            const double d = at(i) - mean;
            return d * d;
        });
        est.std_error = std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
    }
    return est;
}

std::vector<double> sample_W(const EnvironmentModel& env, const SimConfig& cfg) {
    return run_paths(env, cfg, 1, [](const Trajectory& traj, std::span<double> out) {
        out[0] = traj.generations.back().w;
    });
}

HarmonicEstimate estimate_harmonic_moment_W(const EnvironmentModel& env, double a,
                                            const SimConfig& cfg) {
    if (!(a > 0.0)) throw Error(ErrorKind::DomainError, "harmonic moment order must be positive");
    require_no_extinction(env);
    cfg.validate();
    const int n = cfg.n_gens;
    const std::vector<int> gens{std::max(1, n / 4), std::max(1, n / 2), n};
    const auto samples = run_paths(env, cfg, gens.size(), [&](const Trajectory& traj, std::span<double> out) {
        for (std::size_t i = 0; i < gens.size(); ++i) {
            out[i] = std::pow(traj.generations[static_cast<std::size_t>(gens[i])].w, -a);
        }
    });
    HarmonicEstimate res;
    for (std::size_t i = 0; i < gens.size(); ++i) {
        res.trend.emplace_back(gens[i], summarize(samples, gens.size(), i));
    }
    res.estimate = res.trend.back().second;
    return res;
}

std::vector<EstimateWithCI> estimate_laplace(const EnvironmentModel& env, std::span<const double> ts,
                                             const SimConfig& cfg) {
    for (const double t : ts) {
        if (!(t >= 0.0)) throw Error(ErrorKind::DomainError, "Laplace argument must be >= 0");
    }
    const std::vector<double> grid(ts.begin(), ts.end());
    const auto samples = run_paths(env, cfg, grid.size(), [&](const Trajectory& traj, std::span<double> out) {
        const double w = traj.generations.back().w;
        for (std::size_t i = 0; i < grid.size(); ++i) out[i] = std::exp(-grid[i] * w);
    });
    std::vector<EstimateWithCI> res;
    for (std::size_t i = 0; i < grid.size(); ++i) res.push_back(summarize(samples, grid.size(), i));
    return res;
}

EstimateWithCI estimate_laplace(const EnvironmentModel& env, double t, const SimConfig& cfg) {
    const double ts[] = {t};
    return estimate_laplace(env, std::span<const double>(ts), cfg).front();
}

EstimateWithCI plain_harmonic_Zn(const EnvironmentModel& env, double r, int n, const SimConfig& cfg) {
    if (!(r > 0.0)) throw Error(ErrorKind::DomainError, "harmonic moment order must be positive");
    require_no_extinction(env);
    if (n == 0) return {std::pow(static_cast<double>(cfg.k), -r), 0.0, cfg.n_paths, EstimateMethod::Plain};
    SimConfig run = cfg;
    run.n_gens = n;
    const auto samples = run_paths(env, run, 1, [r](const Trajectory& traj, std::span<double> out) {
        out[0] = std::pow(traj.generations.back().z, -r);
    });
    return summarize(samples, 1, 0, EstimateMethod::Plain);
}

EstimateWithCI tilted_harmonic_Zn(const EnvironmentModel& env, double r, int n, const SimConfig& cfg) {
    if (!(r > 0.0)) throw Error(ErrorKind::DomainError, "harmonic moment order must be positive");
    require_no_extinction(env);
    if (n == 0) return {std::pow(static_cast<double>(cfg.k), -r), 0.0, cfg.n_paths, EstimateMethod::Tilted};

    const double c_r = env_moment_m(env, -r);
    std::vector<double> tilted;
    for (const auto& a : env.atoms()) tilted.push_back(a.weight * std::pow(a.law.mean(), -r) / c_r);

    SimConfig run = cfg;
    run.n_gens = n;
    const double log_scale = static_cast<double>(n) * std::log(c_r);
    const auto samples = run_paths(
        env, run, 1,
        [r, log_scale](const Trajectory& traj, std::span<double> out) {
            const auto& last = traj.generations.back();
            out[0] = std::exp(log_scale - r * std::log(last.z / last.pi));
        },
        tilted);
    return summarize(samples, 1, 0, EstimateMethod::Tilted);
}

}  // namespace bpre
