#pragma once

#include <string>

namespace sdg {

/// Shortest round-trip decimal representation ("." separator, locale-free).
std::string format_double(double v);

}  // namespace sdg
