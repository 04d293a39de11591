#pragma once

#include <cstdint>

#include "ktnext/nn/params.hpp"

namespace ktnext::nn {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First and second moments mirroring a ParamStore's layout.
struct AdamState {
  ParamStore first;
  ParamStore second;
  std::uint64_t step = 0;

  static AdamState for_params(const ParamStore& params);
};

/// One bias-corrected ADAM update of `params` in place.
void adam_step(ParamStore& params, const ParamStore& grads, AdamState& state, const AdamConfig& cfg = {});

}  // namespace ktnext::nn
