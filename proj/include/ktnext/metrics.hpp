#pragma once

#include <vector>

#include "ktnext/signal_core.hpp"

namespace ktnext {

struct ReconMetrics {
  double psnr;  // dB; +infinity when rec == gt
  double ssim;
  double hfen;
};

/// 10 log10(peak^2 / MSE) on magnitudes over all frames; peak = max |gt|.
double psnr(const ComplexVolume& rec, const ComplexVolume& gt);

/// Mean local SSIM of magnitude frames: 11x11 Gaussian window (sigma 1.5),
/// K1 = 0.01, K2 = 0.03, dynamic range = max |gt|. The window is truncated
/// at the frame border and renormalised.
double ssim(const ComplexVolume& rec, const ComplexVolume& gt);

/// ||LoG(|rec|) - LoG(|gt|)|| / ||LoG(|gt|)||, 15x15 LoG with sigma 1.5 and
/// zero padding, pooled over all frames.
double hfen(const ComplexVolume& rec, const ComplexVolume& gt);

ReconMetrics evaluate(const ComplexVolume& rec, const ComplexVolume& gt);

/// Zero-sum 15x15 Laplacian-of-Gaussian kernel, row-major.
std::vector<double> log_kernel(int size = 15, double sigma = 1.5);

/// Normalised 1D Gaussian window.
std::vector<double> gaussian_window(int size = 11, double sigma = 1.5);

}  // namespace ktnext
