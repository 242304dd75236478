#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "bpre/environment.hpp"

namespace bpre {

/// Environment file schema (JSON). Exactly one of the top-level keys `atoms` or
/// `fractional_linear` must be present; `name` is optional. Unknown keys are rejected.
///
///   { "atoms": [ {"weight": 0.5, "pmf": [0, 0.5, 0.5]},
///                {"weight": 0.5, "fractional_linear": {"a0": 0, "b0": 0.5, "M": 40}} ] }
///   { "fractional_linear": {"a0": 0, "b0": 0.5, "M": 30} }
///
/// `M` is optional in a fractional-linear block (default: tail mass < 1e-12).
EnvironmentModel parse_environment(std::string_view text);
EnvironmentModel load_environment(const std::filesystem::path& path);

/// Serializes an environment back to the schema above (fractional-linear atoms keep their params).
std::string environment_to_json(const EnvironmentModel& env);

}  // namespace bpre
