#pragma once

#include <string>

namespace pmmm {

// Shortest decimal that round-trips to the same double.
std::string format_double(double v);

}  // namespace pmmm
