#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bpre/environment.hpp"

namespace bpre {

namespace fixtures {

/// Two equally likely atoms {p1 = 0.5, p2 = 0.5} and {p1 = 0.2, p2 = 0.8}.
EnvironmentModel env_e1();
/// Galton-Watson with p1 = p2 = 0.5.
EnvironmentModel gw_half();
/// Single atom with p1 = 0.5 and mean 2: pmf {0, 0.5, 0, 0.5}.
EnvironmentModel single_half_mean_two();
/// Single fractional-linear atom.
EnvironmentModel fractional_linear(double a0, double b0);

}  // namespace fixtures

struct CheckResult {
    std::string id;
    std::string description;
    bool passed = false;
    std::string detail;
    double seconds = 0.0;
    double time_limit = 0.0;
};

struct VerifyOptions {
    std::uint64_t seed = 20240901;
    unsigned threads = 0;
    /// Environment overriding the suite's default fixture, where the suite accepts one.
    std::optional<EnvironmentModel> env;
};

/// Suite names accepted by run_suite, in acceptance order, plus "all".
std::vector<std::string> suite_names();

/// Runs one named suite. Throws UnknownSuite for names not in suite_names().
std::vector<CheckResult> run_suite(std::string_view name, const VerifyOptions& options = {});

std::string format_check(const CheckResult& result);

}  // namespace bpre
