#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "advreg/errors.hpp"
#include "advreg/tensor.hpp"

namespace advreg {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Per-group Adam moments; m/v mirror the parameter shapes, t counts steps.
struct AdamState {
  std::vector<Tensor> m, v;
  std::int64_t t = 0;

  static AdamState like(const std::vector<Tensor*>& params) {
    AdamState s;
    s.m.reserve(params.size());
    s.v.reserve(params.size());
    for (const Tensor* p : params) {
      s.m.emplace_back(p->shape());
      s.v.emplace_back(p->shape());
    }
    return s;
  }
};

/// One bias-corrected Adam update applied in place to a parameter group.
inline void adam_step(const std::vector<Tensor*>& params,
                      const std::vector<const Tensor*>& grads, AdamState& state,
                      const AdamConfig& cfg) {
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw ContractError("adam_step: group sizes disagree");
  state.t += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (std::size_t j = 0; j < params.size(); ++j) {
    Tensor& theta = *params[j];
    const Tensor& g = *grads[j];
    if (!theta.same_shape(g) || !theta.same_shape(state.m[j]))
      throw ContractError("adam_step: shape mismatch in group entry " + std::to_string(j));
    Tensor& m = state.m[j];
    Tensor& v = state.v[j];
    for (std::size_t i = 0; i < theta.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      theta[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
  }
}

}  // namespace advreg
