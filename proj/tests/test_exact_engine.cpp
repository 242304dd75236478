#include <cmath>
#include <functional>
#include <map>
#include <sstream>
#include <vector>

#include "doctest.h"

#include "bpre/environment.hpp"
#include "bpre/error.hpp"
#include "bpre/exact_engine.hpp"
#include "bpre/verification.hpp"

using namespace bpre;

namespace {

using Law = std::map<long, double>;

EnvironmentModel env_with_extinction() {
    return EnvironmentModel({{0.4, make_offspring_law({0.2, 0.3, 0.5})},
                             {0.6, make_offspring_law({0.1, 0.6, 0.3})}});
}

// Follows every individual: each of the z parents picks its own offspring count.
Law step_per_individual(const Law& current, const EnvironmentModel& env) {
    Law next;
    for (const auto& [z, pz] : current) {
        for (const auto& atom : env.atoms()) {
            const auto pmf = atom.law.pmf();
            std::function<void(long, long, double)> visit = [&](long left, long total, double prob) {
                if (left == 0) {
                    next[total] += pz * atom.weight * prob;
                    return;
                }
                for (std::size_t i = 0; i < pmf.size(); ++i) {
                    if (pmf[i] > 0.0) visit(left - 1, total + static_cast<long>(i), prob * pmf[i]);
                }
            };
            visit(z, 0, 1.0);
        }
    }
    return next;
}

double multinomial(long n, const std::vector<long>& counts) {
    double log_c = std::lgamma(static_cast<double>(n) + 1.0);
    for (long c : counts) log_c -= std::lgamma(static_cast<double>(c) + 1.0);
    return std::exp(log_c);
}

// Counts how many parents land in each offspring class and weighs by multinomial coefficients.
Law step_by_class_counts(const Law& current, const EnvironmentModel& env) {
    Law next;
    for (const auto& [z, pz] : current) {
        for (const auto& atom : env.atoms()) {
            const auto pmf = atom.law.pmf();
            std::vector<long> counts(pmf.size(), 0);
            std::function<void(std::size_t, long)> visit = [&](std::size_t cls, long left) {
                if (cls + 1 == pmf.size()) {
                    counts[cls] = left;
                    double prob = multinomial(z, counts);
                    long total = 0;
                    for (std::size_t i = 0; i < counts.size(); ++i) {
                        prob *= std::pow(pmf[i], static_cast<double>(counts[i]));
                        total += static_cast<long>(i) * counts[i];
                    }
                    next[total] += pz * atom.weight * prob;
                    return;
                }
                for (long c = 0; c <= left; ++c) {
                    counts[cls] = c;
                    visit(cls + 1, left - c);
                }
            };
            visit(0, z);
        }
    }
    return next;
}

Law iterate(const std::function<Law(const Law&, const EnvironmentModel&)>& step, const EnvironmentModel& env,
            long k, int n) {
    Law law{{k, 1.0}};
    for (int g = 0; g < n; ++g) law = step(law, env);
    return law;
}

void check_against(const Law& oracle, const DistributionVector& dist) {
    double covered = 0.0;
    for (const auto& [j, p] : oracle) {
        CHECK(dist.prob(static_cast<std::size_t>(j)) == doctest::Approx(p).epsilon(1e-12).scale(1.0));
        covered += p;
    }
    CHECK(covered == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(dist.deficit == doctest::Approx(0.0).epsilon(1e-14));
}

}  // namespace

TEST_SUITE("exact_engine") {

TEST_CASE("per-individual enumeration, k = 1, n <= 4") {
    for (const auto& env : {fixtures::env_e1(), env_with_extinction()}) {
        for (int n = 0; n <= 4; ++n) {
            CAPTURE(n);
            check_against(iterate(step_per_individual, env, 1, n), exact_dist(env, 1, n, 100));
        }
    }
}

TEST_CASE("per-individual enumeration, k = 2, n <= 3") {
    for (const auto& env : {fixtures::env_e1(), env_with_extinction()}) {
        for (int n = 0; n <= 3; ++n) {
            CAPTURE(n);
            check_against(iterate(step_per_individual, env, 2, n), exact_dist(env, 2, n, 100));
        }
    }
}

TEST_CASE("class-count enumeration, k = 2, n = 4") {
    for (const auto& env : {fixtures::env_e1(), env_with_extinction()}) {
        check_against(iterate(step_by_class_counts, env, 2, 4), exact_dist(env, 2, 4, 200));
    }
}

TEST_CASE("monotone path identity") {
    const auto env = fixtures::env_e1();
    const auto dist = exact_dist(env, 1, 5, 64);
    CHECK(dist.prob(1) == doctest::Approx(std::pow(0.35, 5)).epsilon(1e-14));
    const auto d2 = exact_dist(env, 2, 5, 128);
    CHECK(d2.prob(2) == doctest::Approx(std::pow(0.145, 5)).epsilon(1e-14));
}

TEST_CASE("truncation keeps mass accounted") {
    const auto env = env_with_extinction();
    for (std::size_t J : {5u, 10u, 20u}) {
        const auto dist = exact_dist(env, 1, 6, J);
        double total = dist.deficit;
        for (double p : dist.probs) total += p;
        CHECK(total == doctest::Approx(1.0).epsilon(1e-13));
        CHECK(dist.deficit >= 0.0);
    }
    const auto coarse = exact_dist(env, 1, 6, 5);
    const auto fine = exact_dist(env, 1, 6, 400);
    // mass above the cut can still die back into low states, so the coarse law is a lower bound
    for (std::size_t j = 0; j <= 5; ++j) {
        CHECK(coarse.prob(j) <= fine.prob(j) + 1e-15);
        CHECK(fine.prob(j) - coarse.prob(j) <= coarse.deficit + 1e-15);
    }
    const auto env_e1 = fixtures::env_e1();
    const auto coarse_e1 = exact_dist(env_e1, 1, 6, 5);
    const auto fine_e1 = exact_dist(env_e1, 1, 6, 100);
    for (std::size_t j = 1; j <= 5; ++j) CHECK(coarse_e1.prob(j) == doctest::Approx(fine_e1.prob(j)).epsilon(1e-14));
}

TEST_CASE("kernel rows") {
    const auto env = fixtures::env_e1();
    const auto kernel = build_kernel(env, 30);
    CHECK(kernel.truncation() == 30);
    CHECK(kernel(1, 1) == doctest::Approx(0.35));
    CHECK(kernel(1, 2) == doctest::Approx(0.65));
    CHECK(kernel(2, 3) == doctest::Approx(0.5 * 2 * 0.25 + 0.5 * 2 * 0.16));
    CHECK(kernel(3, 2) == 0.0);
    for (std::size_t i = 0; i <= 30; ++i) {
        double row = kernel.row_deficit(i);
        for (std::size_t j = 0; j <= 30; ++j) row += kernel(i, j);
        CHECK(row == doctest::Approx(1.0).epsilon(1e-13));
    }
}

TEST_CASE("unit-mean atom keeps the process frozen") {
    const auto env = EnvironmentModel::single(make_offspring_law({0.0, 1.0}));
    const auto dist = exact_dist(env, 3, 7, 10);
    CHECK(dist.prob(3) == 1.0);
    CHECK(dist.deficit == 0.0);
    std::ostringstream csv;
    write_distribution_csv(csv, dist);
    CHECK(csv.str() == "n,j,prob\n7,3,1\n7,deficit,0\n");
}

TEST_CASE("history matches repeated propagation") {
    const auto env = env_with_extinction();
    const auto hist = exact_dist_history(env, 1, 4, 50);
    REQUIRE(hist.size() == 5);
    for (int n = 0; n <= 4; ++n) {
        const auto direct = exact_dist(env, 1, n, 50);
        CHECK(hist[static_cast<std::size_t>(n)].n == n);
        CHECK(hist[static_cast<std::size_t>(n)].probs == direct.probs);
    }
}

TEST_CASE("functionals of the distribution") {
    const auto env = fixtures::env_e1();
    const auto oracle = iterate(step_per_individual, env, 1, 3);
    const auto dist = exact_dist(env, 1, 3, 100);

    double g = 0.0;
    double h = 0.0;
    for (const auto& [j, p] : oracle) {
        g += p * std::pow(0.7, static_cast<double>(j));
        h += p / std::sqrt(static_cast<double>(j));
    }
    CHECK(gen_func(dist, 0.7).value == doctest::Approx(g).epsilon(1e-13));
    CHECK(gen_func(dist, 0.7).tail_bound == 0.0);
    const auto bounds = harmonic_moment_Zn(dist, 0.5);
    CHECK(bounds.lower == doctest::Approx(h).epsilon(1e-13));
    CHECK(bounds.upper == doctest::Approx(h).epsilon(1e-13));

    const auto cut = exact_dist(env, 1, 6, 20);
    const auto full = exact_dist(env, 1, 6, 200);
    const auto exact_h = harmonic_moment_Zn(full, 1.0).lower;
    const auto cut_h = harmonic_moment_Zn(cut, 1.0);
    CHECK(cut.deficit > 0.0);
    CHECK(cut_h.lower <= exact_h);
    CHECK(cut_h.upper >= exact_h);
    const auto cut_g = gen_func(cut, 0.9);
    CHECK(std::abs(cut_g.value - gen_func(full, 0.9).value) <= cut_g.tail_bound);
}

TEST_CASE("errors") {
    const auto env = fixtures::env_e1();
    CHECK_THROWS_AS(build_kernel(env, 0), Error);
    CHECK_THROWS_AS(initial_distribution(5, 3), Error);
    CHECK_THROWS_AS(gen_func(exact_dist(env, 1, 2, 10), 1.0), Error);
    CHECK_THROWS_AS(harmonic_moment_Zn(exact_dist(env_with_extinction(), 1, 2, 10), 1.0), Error);
    const auto a = exact_dist(env, 1, 1, 10);
    CHECK_THROWS_AS(propagate(build_kernel(env, 20), a), Error);
}

}
