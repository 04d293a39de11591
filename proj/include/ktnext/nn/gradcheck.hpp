#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ktnext/nn/graph.hpp"

namespace ktnext::nn {

struct GradCheckOptions {
  double step = 1e-6;
  double tolerance = 1e-4;
  /// Denominator floor of the relative error, so entries whose true gradient
  /// is zero are judged by absolute error.
  double floor = 1e-6;
  /// Fraction of each input's entries to probe (at least one per input).
  double fraction = 1.0;
  std::uint64_t seed = 1;
};

struct GradCheckReport {
  std::size_t checked = 0;
  double max_rel_error = 0.0;
  std::string worst;  // "input[i][k]: analytic vs numeric"
  bool passed = true;
};

/// Builds a scalar loss from differentiable leaves created from `inputs`.
using LossBuilder = std::function<Var(Graph&, const std::vector<Var>&)>;

/// Compares reverse-mode gradients against central finite differences.
GradCheckReport gradcheck(const LossBuilder& build, const std::vector<Tensor>& inputs,
                          const GradCheckOptions& opts = {});

}  // namespace ktnext::nn
