#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <vector>

#include "ktnext/signal_core.hpp"

namespace ktnext {

struct AcquisitionSpec {
  int accel = 1;          // acceleration factor R
  int n_center = 4;       // always-sampled central phase-encode lines
  int pe_lines = 190;     // nominal phase-encode count the rate refers to
  int shear_step = 1;     // lattice shift per frame

  void validate() const;
};

/// Binary Cartesian phase-encode mask indexed [t][x].
class SamplingMask {
 public:
  SamplingMask(std::size_t t_frames, std::size_t cols);
  SamplingMask(std::size_t t_frames, std::size_t cols, std::vector<std::uint8_t> bits);

  static SamplingMask full(std::size_t t_frames, std::size_t cols);

  std::size_t t_frames() const noexcept { return t_; }
  std::size_t cols() const noexcept { return x_; }
  bool sampled(std::size_t t, std::size_t x) const { return bits_[t * x_ + x] != 0; }
  void set(std::size_t t, std::size_t x, bool on) { bits_[t * x_ + x] = on ? 1 : 0; }

  std::size_t sampled_in_frame(std::size_t t) const;
  std::size_t total_sampled() const;
  /// cols * t_frames / total_sampled.
  double effective_acceleration() const;

  const std::vector<std::uint8_t>& bits() const noexcept { return bits_; }

  friend bool operator==(const SamplingMask&, const SamplingMask&) = default;

 private:
  std::size_t t_, x_;
  std::vector<std::uint8_t> bits_;
};

/// Acquired k-t data; entries at unsampled (t, x) are exactly zero for every y.
class KtMeasurement {
 public:
  KtMeasurement(ComplexVolume kspace, SamplingMask mask);

  const ComplexVolume& kspace() const noexcept { return kspace_; }
  const SamplingMask& mask() const noexcept { return mask_; }
  std::size_t t_frames() const noexcept { return kspace_.t_frames(); }
  std::size_t rows() const noexcept { return kspace_.rows(); }
  std::size_t cols() const noexcept { return kspace_.cols(); }

 private:
  ComplexVolume kspace_;
  SamplingMask mask_;
};

/// Index of the first of the n_center central columns around floor(cols/2).
std::size_t center_block_start(std::size_t cols, std::size_t n_center);

/// Frame t samples {x : (x - t*shear_step - phase) mod accel == 0} plus the
/// n_center columns centred at floor(cols/2).
SamplingMask make_shear_mask(const AcquisitionSpec& spec, std::size_t t_frames, std::size_t cols,
                             int phase = 0);

KtMeasurement undersample(const ComplexVolume& img, const SamplingMask& mask);

/// Zeroes every unsampled (t, x) column of a k-space volume.
ComplexVolume apply_mask(const ComplexVolume& kspace, const SamplingMask& mask);

ComplexVolume zero_filled(const KtMeasurement& m);

/// Ellipse parameters behind a synthetic cardiac-like phantom. Inner ellipses
/// oscillate with one cycle per `period` frames.
struct PhantomEllipse {
  double cx, cy, rx, ry, angle;
  double intensity;
  double motion_amp;   // relative radius modulation
  double drift_x, drift_y;
  double phase;
};

struct PhantomModel {
  std::vector<PhantomEllipse> ellipses;  // [0] is the background
  double phase_x, phase_y, phase_0;      // smooth linear phase map
};

PhantomModel make_phantom_model(std::uint64_t seed);

/// Renders frames [first, first + n_frames) of a model whose motion repeats
/// every `period` frames.
ComplexVolume render_phantom(const PhantomModel& model, std::size_t period, std::size_t first,
                             std::size_t n_frames, std::size_t rows, std::size_t cols);

/// One motion cycle of the phantom for `seed`; dims below 8 are rejected.
ComplexVolume generate_phantom(std::uint64_t seed, std::size_t t_frames, std::size_t rows,
                               std::size_t cols);

struct AugmentDraw {
  double angle_deg = 0.0;
  double scale = 1.0;
};

AugmentDraw draw_augment(std::mt19937_64& rng);

/// Rotation plus isotropic scaling about the frame centre, same for every
/// frame, bilinear on real and imaginary parts, zero outside.
ComplexVolume apply_augment(const ComplexVolume& img, const AugmentDraw& draw);

ComplexVolume augment(const ComplexVolume& img, std::mt19937_64& rng);

/// Uniform double in [0, 1) from 53 random bits; identical across standard
/// libraries, unlike std::uniform_real_distribution.
double uniform01(std::mt19937_64& rng);
double uniform(std::mt19937_64& rng, double lo, double hi);

// CKT1 sequence files and CKM1 mask files.
void save_sequence(const std::filesystem::path& path, const ComplexVolume& v);
ComplexVolume load_sequence(const std::filesystem::path& path, Domain domain = Domain::Image);
void save_mask(const std::filesystem::path& path, const SamplingMask& mask);
SamplingMask load_mask(const std::filesystem::path& path);

}  // namespace ktnext
