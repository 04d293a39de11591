#include "ktnext/xf_pipeline.hpp"

#include <cmath>

#include "ktnext/error.hpp"

namespace ktnext {

namespace {

void check_lambda(double lambda) {
  if (std::isnan(lambda) || lambda < 0.0) throw Error(ErrorCode::InvalidArgument, "lambda must be >= 0");
}

void check_kspace_shape(const ComplexVolume& v, const KtMeasurement& m) {
  if (!v.same_shape(m.kspace())) throw Error(ErrorCode::DimensionMismatch, "volume does not match measurement");
}

}  // namespace

ComplexVolume kspace_temporal_average(const KtMeasurement& m) {
  const auto& k = m.kspace();
  const auto& mask = m.mask();
  ComplexVolume avg(1, k.rows(), k.cols(), Domain::KSpace);
  for (std::size_t x = 0; x < k.cols(); ++x) {
    std::size_t count = 0;
    for (std::size_t t = 0; t < k.t_frames(); ++t) count += mask.sampled(t, x) ? 1 : 0;
    const double denom = static_cast<double>(std::max<std::size_t>(1, count));
    for (std::size_t y = 0; y < k.rows(); ++y) {
      cplx sum{};
      for (std::size_t t = 0; t < k.t_frames(); ++t) sum += k(t, y, x);
      avg(0, y, x) = sum / denom;
    }
  }
  return avg;
}

ComplexVolume broadcast_frames(const ComplexVolume& plane, std::size_t t_frames) {
  if (plane.t_frames() != 1) throw Error(ErrorCode::DimensionMismatch, "broadcast expects a single frame");
  ComplexVolume out(t_frames, plane.rows(), plane.cols(), plane.domain());
  auto src = plane.data();
  auto dst = out.data();
  for (std::size_t t = 0; t < t_frames; ++t) std::copy(src.begin(), src.end(), dst.begin() + t * src.size());
  return out;
}

ComplexVolume dc_baseline_kspace(const ComplexVolume& avg, const KtMeasurement& m) {
  if (avg.t_frames() != 1 || avg.rows() != m.rows() || avg.cols() != m.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "average plane does not match measurement");
  }
  ComplexVolume out = broadcast_frames(avg, m.t_frames());
  out.set_domain(Domain::KSpace);
  for (std::size_t t = 0; t < m.t_frames(); ++t) {
    for (std::size_t x = 0; x < m.cols(); ++x) {
      if (!m.mask().sampled(t, x)) continue;
      for (std::size_t y = 0; y < m.rows(); ++y) out(t, y, x) = m.kspace()(t, y, x);
    }
  }
  return out;
}

ComplexVolume data_consistency(const ComplexVolume& pred_k, const KtMeasurement& m, double lambda) {
  check_lambda(lambda);
  check_kspace_shape(pred_k, m);
  ComplexVolume out = pred_k;
  const bool hard = std::isinf(lambda);
  for (std::size_t t = 0; t < m.t_frames(); ++t) {
    for (std::size_t x = 0; x < m.cols(); ++x) {
      if (!m.mask().sampled(t, x)) continue;
      for (std::size_t y = 0; y < m.rows(); ++y) {
        const cplx acq = m.kspace()(t, y, x);
        out(t, y, x) = hard ? acq : (pred_k(t, y, x) + lambda * acq) / (1.0 + lambda);
      }
    }
  }
  return out;
}

ComplexVolume data_consistency_adjoint(const ComplexVolume& grad_k, const SamplingMask& mask, double lambda) {
  check_lambda(lambda);
  if (grad_k.t_frames() != mask.t_frames() || grad_k.cols() != mask.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "gradient does not match mask");
  }
  ComplexVolume out = grad_k;
  const double keep = std::isinf(lambda) ? 0.0 : 1.0 / (1.0 + lambda);
  for (std::size_t t = 0; t < out.t_frames(); ++t) {
    for (std::size_t x = 0; x < out.cols(); ++x) {
      if (!mask.sampled(t, x)) continue;
      for (std::size_t y = 0; y < out.rows(); ++y) out(t, y, x) *= keep;
    }
  }
  return out;
}

// The temporal average is taken over the acquired samples: masking the hard
// data-consistent k-space of the estimate to the acquisition support leaves
// exactly m.kspace(), so the baseline depends on the measurement alone.
XfPair xf_transform(const ComplexVolume& sigma, const KtMeasurement& m) {
  if (sigma.domain() != Domain::Image) throw Error(ErrorCode::DomainMismatch, "xf_transform expects image data");
  const ComplexVolume v = fft2c(sigma);
  check_kspace_shape(v, m);
  const ComplexVolume avg = kspace_temporal_average(m);

  ComplexVolume residual_k = v;
  for (std::size_t t = 0; t < v.t_frames(); ++t) {
    for (std::size_t y = 0; y < v.rows(); ++y) {
      for (std::size_t x = 0; x < v.cols(); ++x) residual_k(t, y, x) -= avg(0, y, x);
    }
  }
  const ComplexVolume dc_k = dc_baseline_kspace(avg, m);
  return XfPair{fft_t(ifft2c(residual_k)), fft_t(ifft2c(dc_k))};
}

ComplexVolume xf_to_image(const ComplexVolume& rho) {
  if (rho.domain() != Domain::XF) throw Error(ErrorCode::DomainMismatch, "xf_to_image expects x-f data");
  return ifft_t(rho);
}

}  // namespace ktnext
