#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "ktnext/nn/graph.hpp"

namespace ktnext::nn {

/// Same-size 2D convolution with zero padding of dilation*(k-1)/2 per side.
/// weights [c_out][c_in][k][k] with odd k, bias [1][c_out][1][1].
Var conv2d(const Var& x, const Var& weights, const std::optional<Var>& bias, int dilation);

Var relu(const Var& x);
Var leaky_relu(const Var& x, double slope = 0.01);

Var add(const Var& a, const Var& b);
Var add(const std::vector<Var>& terms);
Var sub(const Var& a, const Var& b);
Var scale(const Var& x, double s);

/// Broadcasts a [1][c][1][1] tensor over batch and space and adds it.
Var add_channel_bias(const Var& x, const Var& bias);

Var concat_channels(const Var& a, const Var& b);

/// Batch entry i as a [1][c][h][w] tensor.
Var slice_batch(const Var& x, std::size_t i);
Var stack_batch(const std::vector<Var>& parts);

/// [n][c][h][w] -> [h][c][n][w]; its own inverse.
Var swap_batch_height(const Var& x);

/// Scalar sum of squares of (a - b).
Var squared_error(const Var& a, const Var& b);
Var sum(const Var& x);

/// y = f(x) for a linear f with known adjoint; out_shape is f's output shape.
Var linear_map(const Var& x, Shape out_shape, std::function<Tensor(const Tensor&)> forward,
               std::function<Tensor(const Tensor&)> adjoint);

/// y = f(x) where f is affine with linear part `adjoint`'s transpose.
Var affine_map(const Var& x, std::function<Tensor(const Tensor&)> forward,
               std::function<Tensor(const Tensor&)> adjoint);

// Plain-tensor kernels, shared by the graph ops and usable on their own.
Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor* bias, int dilation);
void conv2d_backward(const Tensor& x, const Tensor& w, const Tensor& grad_out, int dilation, Tensor* grad_x,
                     Tensor* grad_w, Tensor* grad_b);

}  // namespace ktnext::nn
