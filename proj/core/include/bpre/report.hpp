#pragma once

#include <string>

namespace bpre {

/// Shortest-safe textual form of a double: 17 significant digits, '.' separator,
/// `inf`/`-inf`/`nan` spelled out.
std::string format_double(double x);

}  // namespace bpre
