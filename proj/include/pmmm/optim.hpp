#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pmmm/matrix.hpp"

namespace pmmm {

struct AdamConfig {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  // Decoupled (AdamW-style): p <- p - lr * weight_decay * p.
  double weight_decay = 0.0;
};

// Per-entry mask over a parameter list; entry [k][i] true means parameter k,
// element i takes part in the step.
using ParamMask = std::vector<std::vector<bool>>;

// Adam with bias correction. Moments and bias-correction counts are kept per
// element, so a masked step leaves excluded elements (and their moments)
// bit-unchanged; with no mask this is textbook Adam.
class AdamState {
 public:
  AdamState() = default;
  AdamState(AdamConfig config, std::span<const DenseMat> params);

  // Throws ShapeError if params/grads/mask do not match the construction shapes.
  void step(std::span<DenseMat> params, std::span<const DenseMat> grads, const ParamMask* mask = nullptr);

  std::uint64_t steps() const noexcept { return steps_; }
  const AdamConfig& config() const noexcept { return config_; }
  const std::vector<DenseMat>& first_moment() const noexcept { return m_; }
  const std::vector<DenseMat>& second_moment() const noexcept { return v_; }

 private:
  AdamConfig config_;
  std::vector<DenseMat> m_;
  std::vector<DenseMat> v_;
  std::vector<std::vector<std::uint64_t>> counts_;
  std::uint64_t steps_ = 0;
};

}  // namespace pmmm
