#pragma once

#include <limits>

#include "ktnext/kt_sampling.hpp"
#include "ktnext/signal_core.hpp"

namespace ktnext {

inline constexpr double kHardDc = std::numeric_limits<double>::infinity();

/// Operands of the x-f de-aliasing step, both in the x-f domain: the residual
/// of the current estimate against its temporal-average baseline, and the
/// baseline after per-frame data consistency.
struct XfPair {
  ComplexVolume residual;
  ComplexVolume dc_baseline;
};

/// Per-k-position mean of the acquired samples: sum over t divided by
/// max(1, number of frames in which that column was acquired). Returns a
/// single-frame k-space plane. Acquisition support comes from the mask.
ComplexVolume kspace_temporal_average(const KtMeasurement& m);

/// Broadcasts `avg` over all frames and re-imposes each frame's own acquired
/// samples.
ComplexVolume dc_baseline_kspace(const ComplexVolume& avg, const KtMeasurement& m);

/// At sampled positions (pred + lambda * acquired) / (1 + lambda); lambda = inf
/// replaces. Unsampled positions pass through.
ComplexVolume data_consistency(const ComplexVolume& pred_k, const KtMeasurement& m, double lambda = kHardDc);

/// Adjoint of the linear part of data_consistency with respect to pred_k:
/// unsampled entries pass, sampled ones are scaled by 1 / (1 + lambda).
ComplexVolume data_consistency_adjoint(const ComplexVolume& grad_k, const SamplingMask& mask, double lambda);

/// Repeats a single-frame volume over `t_frames` frames.
ComplexVolume broadcast_frames(const ComplexVolume& plane, std::size_t t_frames);

XfPair xf_transform(const ComplexVolume& sigma, const KtMeasurement& m);

ComplexVolume xf_to_image(const ComplexVolume& rho);

}  // namespace ktnext
