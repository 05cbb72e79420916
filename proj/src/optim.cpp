#include "pmmm/optim.hpp"

#include <cmath>

#include "pmmm/error.hpp"

namespace pmmm {

AdamState::AdamState(AdamConfig config, std::span<const DenseMat> params) : config_(config) {
  for (const auto& p : params) {
    m_.emplace_back(p.rows(), p.cols());
    v_.emplace_back(p.rows(), p.cols());
    counts_.emplace_back(p.size(), 0);
  }
}

void AdamState::step(std::span<DenseMat> params, std::span<const DenseMat> grads, const ParamMask* mask) {
  if (params.size() != m_.size() || grads.size() != m_.size() || (mask && mask->size() != m_.size())) {
    throw ShapeError("adam_step: expected " + std::to_string(m_.size()) + " parameters");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (!params[k].same_shape(m_[k]) || !grads[k].same_shape(m_[k]) ||
        (mask && (*mask)[k].size() != m_[k].size())) {
      throw ShapeError("adam_step: parameter " + std::to_string(k) + " has shape " + params[k].shape_str() +
                       ", gradient " + grads[k].shape_str() + ", state " + m_[k].shape_str());
    }
  }
  const auto& c = config_;
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto p = params[k].data();
    auto g = grads[k].data();
    auto m = m_[k].data();
    auto v = v_[k].data();
    auto& cnt = counts_[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (mask && !(*mask)[k][i]) continue;
      const std::uint64_t t = ++cnt[i];
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
      const double mhat = m[i] / (1.0 - std::pow(c.beta1, static_cast<double>(t)));
      const double vhat = v[i] / (1.0 - std::pow(c.beta2, static_cast<double>(t)));
      if (c.weight_decay != 0.0) p[i] -= c.lr * c.weight_decay * p[i];
      p[i] -= c.lr * mhat / (std::sqrt(vhat) + c.eps);
    }
  }
  ++steps_;
}

}  // namespace pmmm
