#pragma once

#include <functional>
#include <span>
#include <vector>

namespace pmmm {

// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h for every coordinate.
// Throws std::invalid_argument for h <= 0 and std::domain_error when f returns
// a non-finite value.
std::vector<double> finite_difference(const std::function<double(std::span<const double>)>& f,
                                      std::span<const double> point, double h);

// |a - b| <= max(rel * max(|a|, |b|), abs_floor)
bool close_relative(double a, double b, double rel, double abs_floor);

}  // namespace pmmm
