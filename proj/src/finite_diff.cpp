#include "pmmm/finite_diff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace pmmm {

std::vector<double> finite_difference(const std::function<double(std::span<const double>)>& f,
                                      std::span<const double> point, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite_difference: h must be positive");
  std::vector<double> x(point.begin(), point.end());
  std::vector<double> grad(x.size());
  auto eval = [&](std::size_t i) {
    const double v = f(x);
    if (!std::isfinite(v)) {
      throw std::domain_error("finite_difference: non-finite evaluation at coordinate " + std::to_string(i));
    }
    return v;
  };
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + h;
    const double up = eval(i);
    x[i] = orig - h;
    const double down = eval(i);
    x[i] = orig;
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

bool close_relative(double a, double b, double rel, double abs_floor) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return std::abs(a - b) <= std::max(rel * scale, abs_floor);
}

}  // namespace pmmm
