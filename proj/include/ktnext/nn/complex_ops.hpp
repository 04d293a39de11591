#pragma once

#include "ktnext/kt_sampling.hpp"
#include "ktnext/nn/graph.hpp"
#include "ktnext/signal_core.hpp"

namespace ktnext::nn {

// A complex volume [t][y][x] embeds as a real tensor [t][2][y][x] with the
// real part in channel 0 and the imaginary part in channel 1. With this
// embedding the gradient of a real loss with respect to a C-linear map's
// input is the map's Hermitian adjoint applied to the output gradient.
Tensor to_tensor(const ComplexVolume& v);
ComplexVolume to_volume(const Tensor& t, Domain domain);

Var fft2c(const Var& image);
Var ifft2c(const Var& kspace);
Var fft_t(const Var& image);
Var ifft_t(const Var& xf);

/// Differentiable data consistency against m; the derivative with respect to
/// the prediction is zero at sampled positions when lambda is infinite.
Var data_consistency(const Var& pred_k, const KtMeasurement& m, double lambda);

}  // namespace ktnext::nn
