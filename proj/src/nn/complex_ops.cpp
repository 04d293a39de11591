#include "ktnext/nn/complex_ops.hpp"

#include "ktnext/error.hpp"
#include "ktnext/nn/ops.hpp"
#include "ktnext/xf_pipeline.hpp"

namespace ktnext::nn {

Tensor to_tensor(const ComplexVolume& v) {
  Tensor out(Shape{v.t_frames(), 2, v.rows(), v.cols()});
  for (std::size_t t = 0; t < v.t_frames(); ++t)
    for (std::size_t y = 0; y < v.rows(); ++y)
      for (std::size_t x = 0; x < v.cols(); ++x) {
        out(t, 0, y, x) = v(t, y, x).real();
        out(t, 1, y, x) = v(t, y, x).imag();
      }
  return out;
}

ComplexVolume to_volume(const Tensor& t, Domain domain) {
  const Shape s = t.shape();
  if (s.c != 2) throw Error(ErrorCode::DimensionMismatch, "complex embedding needs 2 channels, got " + to_string(s));
  ComplexVolume out(s.n, s.h, s.w, domain);
  for (std::size_t n = 0; n < s.n; ++n)
    for (std::size_t y = 0; y < s.h; ++y)
      for (std::size_t x = 0; x < s.w; ++x) out(n, y, x) = cplx{t(n, 0, y, x), t(n, 1, y, x)};
  return out;
}

namespace {

using VolumeFn = ComplexVolume (*)(const ComplexVolume&);

Var unitary(const Var& x, Domain in, Domain out, VolumeFn forward, VolumeFn adjoint) {
  return linear_map(
      x, x.shape(), [=](const Tensor& v) { return to_tensor(forward(to_volume(v, in))); },
      [=](const Tensor& g) { return to_tensor(adjoint(to_volume(g, out))); });
}

}  // namespace

Var fft2c(const Var& image) {
  return unitary(image, Domain::Image, Domain::KSpace, &ktnext::fft2c, &ktnext::ifft2c);
}

Var ifft2c(const Var& kspace) {
  return unitary(kspace, Domain::KSpace, Domain::Image, &ktnext::ifft2c, &ktnext::fft2c);
}

Var fft_t(const Var& image) { return unitary(image, Domain::Image, Domain::XF, &ktnext::fft_t, &ktnext::ifft_t); }

Var ifft_t(const Var& xf) { return unitary(xf, Domain::XF, Domain::Image, &ktnext::ifft_t, &ktnext::fft_t); }

Var data_consistency(const Var& pred_k, const KtMeasurement& m, double lambda) {
  const SamplingMask mask = m.mask();
  return affine_map(
      pred_k,
      [&m, lambda](const Tensor& v) {
        return to_tensor(ktnext::data_consistency(to_volume(v, Domain::KSpace), m, lambda));
      },
      [mask, lambda](const Tensor& g) {
        return to_tensor(data_consistency_adjoint(to_volume(g, Domain::KSpace), mask, lambda));
      });
}

}  // namespace ktnext::nn
