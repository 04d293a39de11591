#include "ktnext/nn/adam.hpp"

#include <cmath>

#include "ktnext/error.hpp"

namespace ktnext::nn {

AdamState AdamState::for_params(const ParamStore& params) {
  return AdamState{params.zeros_like(), params.zeros_like(), 0};
}

void adam_step(ParamStore& params, const ParamStore& grads, AdamState& state, const AdamConfig& cfg) {
  if (!params.same_layout(grads) || !params.same_layout(state.first) || !params.same_layout(state.second)) {
    throw Error(ErrorCode::DimensionMismatch, "adam: gradient/state layout differs from parameters");
  }
  if (!(cfg.lr > 0.0)) throw Error(ErrorCode::InvalidArgument, "adam: learning rate must be positive");
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params.values(i);
    auto g = grads.values(i);
    auto m = state.first.values(i);
    auto v = state.second.values(i);
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * g[k];
      v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * g[k] * g[k];
      const double mhat = m[k] / c1;
      const double vhat = v[k] / c2;
      p[k] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
}

}  // namespace ktnext::nn
