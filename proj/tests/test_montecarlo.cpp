#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"

#include "bpre/environment.hpp"
#include "bpre/error.hpp"
#include "bpre/exact_engine.hpp"
#include "bpre/montecarlo.hpp"
#include "bpre/verification.hpp"

using namespace bpre;

namespace {

std::vector<double> final_sizes(const EnvironmentModel& env, const SimConfig& cfg) {
    return run_paths(env, cfg, 1, [](const Trajectory& t, std::span<double> out) {
        out[0] = t.generations.back().z;
    });
}

std::vector<double> histogram(const std::vector<double>& sizes, std::size_t bins) {
    std::vector<double> h(bins, 0.0);
    for (double z : sizes) h[std::min(static_cast<std::size_t>(z), bins - 1)] += 1.0;
    for (double& x : h) x /= static_cast<double>(sizes.size());
    return h;
}

double total_variation(const std::vector<double>& a, const std::vector<double>& b) {
    double tv = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) tv += std::abs(a[i] - b[i]);
    return tv / 2.0;
}

// Upper quantile of chi-square with `df` degrees of freedom (Wilson-Hilferty), z = 3.09 for 0.001.
double chi_square_critical(double df) {
    const double z = 3.09;
    const double c = 2.0 / (9.0 * df);
    return df * std::pow(1.0 - c + z * std::sqrt(c), 3.0);
}

}  // namespace

TEST_SUITE("montecarlo") {

TEST_CASE("config validation") {
    SimConfig cfg;
    cfg.n_paths = 0;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = {};
    cfg.exact_pop_threshold = 10;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = {};
    cfg.k = 0;
    CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("law of Z_5 against the exact distribution") {
    const auto env = fixtures::env_e1();
    const auto exact = exact_dist(env, 1, 5, 64);
    SimConfig cfg;
    cfg.seed = 99;
    cfg.n_paths = 40000;
    cfg.n_gens = 5;
    const auto sizes = final_sizes(env, cfg);
    const auto observed = histogram(sizes, 33);

    // chi-square with cells pooled until the expected count reaches 5
    double stat = 0.0;
    int cells = 0;
    double exp_acc = 0.0;
    double obs_acc = 0.0;
    const auto n = static_cast<double>(cfg.n_paths);
    for (std::size_t j = 0; j <= 32; ++j) {
        exp_acc += exact.prob(j) * n;
        obs_acc += observed[j] * n;
        if (exp_acc >= 5.0 || j == 32) {
            if (exp_acc > 0.0) {
                stat += (obs_acc - exp_acc) * (obs_acc - exp_acc) / exp_acc;
                ++cells;
            }
            exp_acc = obs_acc = 0.0;
        }
    }
    CHECK(stat < chi_square_critical(cells - 1));

    // TV against the spread of TV for i.i.d. draws from the exact law
    std::vector<double> probs(33, 0.0);
    for (std::size_t j = 0; j <= 32; ++j) probs[j] = exact.prob(j);
    std::discrete_distribution<std::size_t> draw(probs.begin(), probs.end());
    std::mt19937_64 rng(5);
    std::vector<double> floor;
    for (int rep = 0; rep < 30; ++rep) {
        std::vector<double> iid(static_cast<std::size_t>(cfg.n_paths));
        for (double& z : iid) z = static_cast<double>(draw(rng));
        floor.push_back(total_variation(histogram(iid, 33), probs));
    }
    double mean = 0.0;
    for (double f : floor) mean += f / floor.size();
    double var = 0.0;
    for (double f : floor) var += (f - mean) * (f - mean) / (floor.size() - 1);
    CHECK(total_variation(observed, probs) <= mean + 4.0 * std::sqrt(var));
}

TEST_CASE("results do not depend on the thread count") {
    const auto env = fixtures::env_e1();
    SimConfig cfg;
    cfg.seed = 3;
    cfg.n_paths = 2000;
    cfg.n_gens = 12;
    cfg.threads = 1;
    const auto one = sample_W(env, cfg);
    cfg.threads = 4;
    const auto four = sample_W(env, cfg);
    cfg.threads = 7;
    const auto seven = sample_W(env, cfg);
    CHECK(one == four);
    CHECK(one == seven);
    CHECK(summarize(one, 1, 0).point == summarize(seven, 1, 0).point);

    cfg.seed = 4;
    CHECK(sample_W(env, cfg) != one);
}

TEST_CASE("paths without extinction never shrink") {
    const auto env = fixtures::env_e1();
    for (std::uint64_t p = 0; p < 200; ++p) {
        auto rng = path_rng(17, p);
        const auto traj = simulate_path(env, 2, 15, rng);
        CHECK(traj.generations.size() == 16);
        CHECK(traj.generations.front().z == 2.0);
        for (std::size_t g = 1; g < traj.generations.size(); ++g) {
            CHECK(traj.generations[g].z >= traj.generations[g - 1].z);
        }
    }
}

TEST_CASE("Gaussian regime keeps the martingale mean") {
    const auto env = fixtures::env_e1();
    SimConfig cfg;
    cfg.seed = 12;
    cfg.n_paths = 20000;
    cfg.n_gens = 25;
    cfg.exact_pop_threshold = 1000;
    const auto w = sample_W(env, cfg);
    const auto est = summarize(w, 1, 0);
    CHECK(std::abs(est.point - 1.0) <= 0.02);

    auto rng = path_rng(12, 0);
    const auto traj = simulate_path(env, 1, 25, rng, 1000);
    CHECK(traj.gaussian);
}

TEST_CASE("populations beyond 64-bit counts are flagged") {
    std::vector<double> pmf(1001, 0.0);
    pmf[1000] = 1.0;
    const auto env = EnvironmentModel::single(make_offspring_law(pmf));
    auto rng = path_rng(1, 0);
    const auto traj = simulate_path(env, 1, 8, rng);
    CHECK(traj.approximate);
    CHECK(traj.generations.back().w == doctest::Approx(1.0).epsilon(1e-6));
    auto rng2 = path_rng(1, 0);
    CHECK_FALSE(simulate_path(env, 1, 3, rng2).approximate);
}

TEST_CASE("tilted and plain harmonic moments of Z_n") {
    const auto env = fixtures::env_e1();
    const auto exact = harmonic_moment_Zn(exact_dist(env, 1, 6, 200), 1.5).lower;
    SimConfig cfg;
    cfg.seed = 8;
    cfg.n_paths = 20000;
    const auto tilted = tilted_harmonic_Zn(env, 1.5, 6, cfg);
    const auto plain = plain_harmonic_Zn(env, 1.5, 6, cfg);
    CHECK(tilted.method == EstimateMethod::Tilted);
    CHECK(std::abs(tilted.point - exact) <= 4.0 * tilted.std_error);
    CHECK(std::abs(plain.point - exact) <= 4.0 * plain.std_error);

    cfg.k = 3;
    CHECK(tilted_harmonic_Zn(env, 2.0, 0, cfg).point == doctest::Approx(1.0 / 9.0));
    CHECK(plain_harmonic_Zn(env, 2.0, 0, cfg).point == doctest::Approx(1.0 / 9.0));
}

TEST_CASE("Laplace transform and harmonic moments of W") {
    const auto env = fixtures::env_e1();
    SimConfig cfg;
    cfg.seed = 21;
    cfg.n_paths = 5000;
    cfg.n_gens = 15;
    CHECK(estimate_laplace(env, 0.0, cfg).point == 1.0);
    const std::vector<double> ts{0.5, 1.0, 2.0};
    const auto lap = estimate_laplace(env, ts, cfg);
    CHECK(lap[0].point > lap[1].point);
    CHECK(lap[1].point > lap[2].point);
    // Jensen: E exp(-tW) >= exp(-t E W) = exp(-t)
    CHECK(lap[1].point >= std::exp(-1.0) - 4.0 * lap[1].std_error);

    const auto h = estimate_harmonic_moment_W(env, 0.5, cfg);
    REQUIRE(h.trend.size() == 3);
    CHECK(h.trend.back().first == 15);
    CHECK(h.estimate.point == h.trend.back().second.point);
    CHECK(h.estimate.point >= 1.0);  // Jensen with E W = 1

    const auto with_p0 = EnvironmentModel::single(make_offspring_law({0.2, 0.3, 0.5}));
    CHECK_THROWS_AS(estimate_harmonic_moment_W(with_p0, 0.5, cfg), Error);
    CHECK_THROWS_AS(estimate_laplace(env, -1.0, cfg), Error);
}

}
