#include "ktnext/kt_sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "ktnext/error.hpp"

namespace ktnext {

void AcquisitionSpec::validate() const {
  if (accel < 1) throw Error(ErrorCode::InvalidArgument, "accel must be >= 1");
  if (n_center < 0) throw Error(ErrorCode::InvalidArgument, "n_center must be >= 0");
  if (pe_lines < 1 || n_center > pe_lines) {
    throw Error(ErrorCode::InvalidArgument, "n_center must not exceed pe_lines");
  }
}

SamplingMask::SamplingMask(std::size_t t_frames, std::size_t cols)
    : t_(t_frames), x_(cols), bits_(t_frames * cols, 0) {
  if (t_ == 0 || x_ == 0) throw Error(ErrorCode::InvalidArgument, "mask dimensions must be >= 1");
}

SamplingMask::SamplingMask(std::size_t t_frames, std::size_t cols, std::vector<std::uint8_t> bits)
    : t_(t_frames), x_(cols), bits_(std::move(bits)) {
  if (t_ == 0 || x_ == 0) throw Error(ErrorCode::InvalidArgument, "mask dimensions must be >= 1");
  if (bits_.size() != t_ * x_) throw Error(ErrorCode::DimensionMismatch, "mask payload is not T*X");
  for (auto& b : bits_) {
    if (b > 1) throw Error(ErrorCode::InvalidArgument, "mask entries must be 0 or 1");
  }
}

SamplingMask SamplingMask::full(std::size_t t_frames, std::size_t cols) {
  return SamplingMask(t_frames, cols, std::vector<std::uint8_t>(t_frames * cols, 1));
}

std::size_t SamplingMask::sampled_in_frame(std::size_t t) const {
  return static_cast<std::size_t>(
      std::count(bits_.begin() + static_cast<std::ptrdiff_t>(t * x_),
                 bits_.begin() + static_cast<std::ptrdiff_t>((t + 1) * x_), std::uint8_t{1}));
}

std::size_t SamplingMask::total_sampled() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

double SamplingMask::effective_acceleration() const {
  const auto n = total_sampled();
  if (n == 0) return std::numeric_limits<double>::infinity();
  return static_cast<double>(t_ * x_) / static_cast<double>(n);
}

KtMeasurement::KtMeasurement(ComplexVolume kspace, SamplingMask mask)
    : kspace_(std::move(kspace)), mask_(std::move(mask)) {
  if (kspace_.t_frames() != mask_.t_frames() || kspace_.cols() != mask_.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "k-space and mask disagree on T or X");
  }
  if (kspace_.domain() != Domain::KSpace) {
    throw Error(ErrorCode::DomainMismatch, "measurement must hold k-space data");
  }
  for (std::size_t t = 0; t < t_frames(); ++t) {
    for (std::size_t x = 0; x < cols(); ++x) {
      if (mask_.sampled(t, x)) continue;
      for (std::size_t y = 0; y < rows(); ++y) {
        if (kspace_(t, y, x) != cplx{}) {
          throw Error(ErrorCode::ContractViolation, "nonzero k-space at an unsampled position");
        }
      }
    }
  }
}

std::size_t center_block_start(std::size_t cols, std::size_t n_center) { return cols / 2 - n_center / 2; }

SamplingMask make_shear_mask(const AcquisitionSpec& spec, std::size_t t_frames, std::size_t cols, int phase) {
  spec.validate();
  if (cols < static_cast<std::size_t>(spec.n_center)) {
    throw Error(ErrorCode::InvalidArgument, "cols smaller than the number of central lines");
  }
  if (spec.n_center == 0 && cols < static_cast<std::size_t>(spec.accel)) {
    // some lattice offsets would land outside the frame and leave it empty
    throw Error(ErrorCode::InvalidArgument, "cols smaller than accel with no central lines");
  }
  SamplingMask mask(t_frames, cols);
  const long r = spec.accel;
  const std::size_t c0 = center_block_start(cols, static_cast<std::size_t>(spec.n_center));
  for (std::size_t t = 0; t < t_frames; ++t) {
    const long offset = static_cast<long>(t) * spec.shear_step + phase;
    for (std::size_t x = 0; x < cols; ++x) {
      const long d = ((static_cast<long>(x) - offset) % r + r) % r;
      const bool center = x >= c0 && x < c0 + static_cast<std::size_t>(spec.n_center);
      mask.set(t, x, d == 0 || center);
    }
  }
  return mask;
}

ComplexVolume apply_mask(const ComplexVolume& kspace, const SamplingMask& mask) {
  if (kspace.t_frames() != mask.t_frames() || kspace.cols() != mask.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "mask does not match volume");
  }
  ComplexVolume out = kspace;
  for (std::size_t t = 0; t < out.t_frames(); ++t) {
    for (std::size_t y = 0; y < out.rows(); ++y) {
      for (std::size_t x = 0; x < out.cols(); ++x) {
        if (!mask.sampled(t, x)) out(t, y, x) = cplx{};
      }
    }
  }
  return out;
}

KtMeasurement undersample(const ComplexVolume& img, const SamplingMask& mask) {
  if (img.t_frames() != mask.t_frames() || img.cols() != mask.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "image does not match mask");
  }
  return KtMeasurement(apply_mask(fft2c(img), mask), mask);
}

ComplexVolume zero_filled(const KtMeasurement& m) { return ifft2c(m.kspace()); }

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double uniform(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

PhantomModel make_phantom_model(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  PhantomModel model{};
  model.ellipses.push_back(PhantomEllipse{uniform(rng, -0.05, 0.05), uniform(rng, -0.05, 0.05),
                                          uniform(rng, 0.72, 0.88), uniform(rng, 0.72, 0.88),
                                          uniform(rng, -0.5, 0.5), uniform(rng, 0.25, 0.45),
                                          0.0, 0.0, 0.0, 0.0});
  const int inner = 2 + static_cast<int>(rng() % 3);
  for (int i = 0; i < inner; ++i) {
    PhantomEllipse e{};
    const double rad = uniform(rng, 0.0, 0.4);
    const double ang = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    e.cx = rad * std::cos(ang);
    e.cy = rad * std::sin(ang);
    e.rx = uniform(rng, 0.12, 0.3);
    e.ry = uniform(rng, 0.12, 0.3);
    e.angle = uniform(rng, 0.0, std::numbers::pi);
    e.intensity = uniform(rng, 0.55, 1.0);
    e.motion_amp = uniform(rng, 0.1, 0.3);
    e.drift_x = uniform(rng, -0.08, 0.08);
    e.drift_y = uniform(rng, -0.08, 0.08);
    e.phase = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    model.ellipses.push_back(e);
  }
  model.phase_x = uniform(rng, -0.8, 0.8);
  model.phase_y = uniform(rng, -0.8, 0.8);
  model.phase_0 = uniform(rng, -std::numbers::pi, std::numbers::pi);
  return model;
}

ComplexVolume render_phantom(const PhantomModel& model, std::size_t period, std::size_t first,
                             std::size_t n_frames, std::size_t rows, std::size_t cols) {
  if (period == 0) throw Error(ErrorCode::InvalidArgument, "period must be >= 1");
  ComplexVolume out(n_frames, rows, cols, Domain::Image);
  const double hx = static_cast<double>(cols) / 2.0;
  const double hy = static_cast<double>(rows) / 2.0;
  const double pixel = 1.0 / std::min(hx, hy);
  for (std::size_t k = 0; k < n_frames; ++k) {
    const std::size_t cycle_pos = (first + k) % period;
    const double theta = 2.0 * std::numbers::pi * static_cast<double>(cycle_pos) / static_cast<double>(period);
    for (std::size_t y = 0; y < rows; ++y) {
      const double v = (static_cast<double>(y) - hy) / hy;
      for (std::size_t x = 0; x < cols; ++x) {
        const double u = (static_cast<double>(x) - hx) / hx;
        double value = 0.0;
        for (const auto& e : model.ellipses) {
          const double s = std::sin(theta + e.phase);
          const double grow = 1.0 + e.motion_amp * s;
          const double cx = e.cx + e.drift_x * s;
          const double cy = e.cy + e.drift_y * s;
          const double rx = e.rx * grow;
          const double ry = e.ry * grow;
          const double ca = std::cos(e.angle);
          const double sa = std::sin(e.angle);
          const double du = u - cx;
          const double dv = v - cy;
          const double a = (ca * du + sa * dv) / rx;
          const double b = (-sa * du + ca * dv) / ry;
          const double q = std::sqrt(a * a + b * b);
          // about one pixel of soft edge
          const double w = std::clamp((1.0 - q) * std::min(rx, ry) / pixel + 0.5, 0.0, 1.0);
          value = value * (1.0 - w) + e.intensity * w;
        }
        const double phi = model.phase_x * u + model.phase_y * v + model.phase_0;
        out(k, y, x) = std::polar(value, phi);
      }
    }
  }
  return out;
}

ComplexVolume generate_phantom(std::uint64_t seed, std::size_t t_frames, std::size_t rows, std::size_t cols) {
  if (t_frames < 8 || rows < 8 || cols < 8) {
    throw Error(ErrorCode::InvalidArgument, "phantom dimensions must be >= 8");
  }
  return render_phantom(make_phantom_model(seed), t_frames, 0, t_frames, rows, cols);
}

AugmentDraw draw_augment(std::mt19937_64& rng) {
  AugmentDraw d;
  d.angle_deg = uniform(rng, -15.0, 15.0);
  d.scale = uniform(rng, 0.9, 1.1);
  return d;
}

ComplexVolume apply_augment(const ComplexVolume& img, const AugmentDraw& draw) {
  if (!(draw.scale > 0.0)) throw Error(ErrorCode::InvalidArgument, "scale must be positive");
  ComplexVolume out(img.t_frames(), img.rows(), img.cols(), img.domain());
  const double rad = draw.angle_deg * std::numbers::pi / 180.0;
  const double c = std::cos(rad) / draw.scale;
  const double s = std::sin(rad) / draw.scale;
  const double cx = static_cast<double>(img.cols() / 2);
  const double cy = static_cast<double>(img.rows() / 2);
  const auto X = static_cast<long>(img.cols());
  const auto Y = static_cast<long>(img.rows());
  for (std::size_t y = 0; y < img.rows(); ++y) {
    for (std::size_t x = 0; x < img.cols(); ++x) {
      const double dx = static_cast<double>(x) - cx;
      const double dy = static_cast<double>(y) - cy;
      // inverse map: rotate by -angle, shrink by 1/scale
      const double sx = cx + c * dx + s * dy;
      const double sy = cy - s * dx + c * dy;
      const double fx0 = std::floor(sx);
      const double fy0 = std::floor(sy);
      const double fx = sx - fx0;
      const double fy = sy - fy0;
      const long x0 = static_cast<long>(fx0);
      const long y0 = static_cast<long>(fy0);
      const double w[4] = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};
      const long px[4] = {x0, x0 + 1, x0, x0 + 1};
      const long py[4] = {y0, y0, y0 + 1, y0 + 1};
      for (std::size_t t = 0; t < img.t_frames(); ++t) {
        cplx acc{};
        for (int k = 0; k < 4; ++k) {
          if (w[k] == 0.0 || px[k] < 0 || py[k] < 0 || px[k] >= X || py[k] >= Y) continue;
          acc += w[k] * img(t, static_cast<std::size_t>(py[k]), static_cast<std::size_t>(px[k]));
        }
        out(t, y, x) = acc;
      }
    }
  }
  return out;
}

ComplexVolume augment(const ComplexVolume& img, std::mt19937_64& rng) {
  return apply_augment(img, draw_augment(rng));
}

}  // namespace ktnext
