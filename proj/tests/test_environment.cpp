#include <cmath>
#include <vector>

#include "doctest.h"

#include "bpre/environment.hpp"
#include "bpre/error.hpp"
#include "bpre/verification.hpp"

using namespace bpre;

namespace {

ErrorKind kind_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected bpre::Error");
    return ErrorKind::BadParams;
}

}  // namespace

TEST_SUITE("environment") {

TEST_CASE("offspring law validation") {
    CHECK(kind_of([] { make_offspring_law({0.5, -0.1, 0.6}); }) == ErrorKind::NegativeMass);
    CHECK(kind_of([] { make_offspring_law({0.5, 0.4}); }) == ErrorKind::BadNormalization);
    CHECK(kind_of([] { make_offspring_law({}); }) == ErrorKind::BadNormalization);

    const auto law = make_offspring_law({0.0, 0.5, 0.5, 0.0, 0.0});
    CHECK(law.max_offspring() == 2);
    CHECK(law.mean() == doctest::Approx(1.5));
    CHECK(law.no_extinction());
    CHECK(law.p(7) == 0.0);

    const auto tiny = make_offspring_law({-1e-16, 1.0});
    CHECK(tiny.p(0) == 0.0);
}

TEST_CASE("generating function by Horner matches direct sum") {
    const std::vector<double> pmf{0.1, 0.2, 0.3, 0.4};
    const auto law = make_offspring_law(pmf);
    for (double t : {0.0, 0.25, 0.5, 0.9, 1.0}) {
        double direct = 0.0;
        for (std::size_t i = 0; i < pmf.size(); ++i) direct += pmf[i] * std::pow(t, static_cast<double>(i));
        CHECK(gf_eval(law, t) == doctest::Approx(direct).epsilon(1e-14));
    }
    CHECK(kind_of([&] { gf_eval(law, 1.5); }) == ErrorKind::DomainError);
    CHECK(kind_of([&] { gf_eval(law, -0.1); }) == ErrorKind::DomainError);
}

TEST_CASE("fractional-linear truncation") {
    // f(t) = a0 + (1-a0)(1-b0) t / (1 - b0 t)
    const FractionalLinearParams params{0.2, 0.6, 0};
    const auto law = fractional_linear_law(params);
    REQUIRE(law.fractional_linear().has_value());
    double total = 0.0;
    for (double p : law.pmf()) total += p;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
    for (double t : {0.1, 0.5, 0.8}) {
        const double closed = params.a0 + (1 - params.a0) * (1 - params.b0) * t / (1 - params.b0 * t);
        CHECK(gf_eval(law, t) == doctest::Approx(closed).epsilon(1e-11));
    }
    // Folding the tail mass onto the last support point only shortens the mean.
    CHECK(law.mean() <= params.closed_form_mean());
    CHECK(law.mean() == doctest::Approx(params.closed_form_mean()).epsilon(1e-9));

    CHECK(kind_of([] { fractional_linear_law({0.0, 1.0, 0}); }) == ErrorKind::BadParams);
    CHECK(kind_of([] { fractional_linear_law({1.2, 0.5, 0}); }) == ErrorKind::BadParams);
    CHECK(fractional_linear_default_truncation(0.0, 0.5) >= 40);
}

TEST_CASE("environment weights") {
    CHECK(kind_of([] {
              EnvironmentModel({{0.5, make_offspring_law({0, 1})}, {0.4, make_offspring_law({0, 0, 1})}});
          }) == ErrorKind::BadNormalization);
    CHECK(kind_of([] {
              EnvironmentModel({{1.5, make_offspring_law({0, 1})}, {-0.5, make_offspring_law({0, 0, 1})}});
          }) == ErrorKind::BadParams);
}

TEST_CASE("moments of E1") {
    const auto env = fixtures::env_e1();
    CHECK(env.size() == 2);
    CHECK(env.max_offspring() == 2);
    CHECK(gamma_k(env, 1) == doctest::Approx(0.35));
    CHECK(gamma_k(env, 2) == doctest::Approx(0.145));
    CHECK(env_moment_m(env, 1.0) == doctest::Approx(1.65));
    CHECK(env_moment_m(env, -1.0) == doctest::Approx(0.5 / 1.5 + 0.5 / 1.8));
    CHECK(env_log_mean(env) == doctest::Approx(0.5 * std::log(1.5) + 0.5 * std::log(1.8)));
    CHECK(prob_unit_mean(env) == 0.0);
    CHECK(env_p1k_moment(env, 1, 1.0) == doctest::Approx(0.5 * 0.5 * 1.5 + 0.5 * 0.2 * 1.8));
}

TEST_CASE("negative moments need positive means") {
    const EnvironmentModel env({{0.5, make_offspring_law({1.0})}, {0.5, make_offspring_law({0, 0, 1})}});
    CHECK(kind_of([&] { env_moment_m(env, -1.0); }) == ErrorKind::ZeroMean);
    CHECK(env_moment_m(env, 1.0) == doctest::Approx(1.0));
}

TEST_CASE("reweighting keeps laws") {
    const auto env = fixtures::env_e1();
    const std::vector<double> w{0.9, 0.1};
    const auto tilted = env.reweighted(w);
    CHECK(tilted.atoms()[0].weight == doctest::Approx(0.9));
    CHECK(gamma_k(tilted, 1) == doctest::Approx(0.9 * 0.5 + 0.1 * 0.2));
}

}
