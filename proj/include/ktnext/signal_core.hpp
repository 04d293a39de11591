#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace ktnext {

using cplx = std::complex<double>;

/// Which space a volume's axes live in. The leading axis is time in image and
/// k-space, temporal frequency in x-f and k-f.
enum class Domain { Image, KSpace, XF, KF };

enum class Axis { T, Y, X };

const char* to_string(Domain d) noexcept;

/// Dense complex sequence indexed [t][y][x]; y is the readout axis, x the
/// phase-encode axis. All stored values are finite.
class ComplexVolume {
 public:
  ComplexVolume(std::size_t t_frames, std::size_t rows, std::size_t cols,
                Domain domain = Domain::Image);
  ComplexVolume(std::size_t t_frames, std::size_t rows, std::size_t cols, Domain domain,
                std::vector<cplx> data);

  std::size_t t_frames() const noexcept { return t_; }
  std::size_t rows() const noexcept { return y_; }
  std::size_t cols() const noexcept { return x_; }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t extent(Axis axis) const noexcept;
  std::size_t frame_size() const noexcept { return y_ * x_; }

  Domain domain() const noexcept { return domain_; }
  void set_domain(Domain d) noexcept { domain_ = d; }

  cplx& operator()(std::size_t t, std::size_t y, std::size_t x) { return data_[(t * y_ + y) * x_ + x]; }
  const cplx& operator()(std::size_t t, std::size_t y, std::size_t x) const {
    return data_[(t * y_ + y) * x_ + x];
  }

  std::span<cplx> data() noexcept { return data_; }
  std::span<const cplx> data() const noexcept { return data_; }

  bool same_shape(const ComplexVolume& other) const noexcept {
    return t_ == other.t_ && y_ == other.y_ && x_ == other.x_;
  }

  bool all_finite() const noexcept;

 private:
  std::size_t t_, y_, x_;
  Domain domain_;
  std::vector<cplx> data_;
};

// Centered (zero frequency at index floor(N/2)), orthonormal transforms.
ComplexVolume fft1c(const ComplexVolume& v, Axis axis);
ComplexVolume ifft1c(const ComplexVolume& v, Axis axis);

// Per-frame 2D transform over (y, x). fft2c requires an image-domain volume,
// ifft2c a k-space volume.
ComplexVolume fft2c(const ComplexVolume& v);
ComplexVolume ifft2c(const ComplexVolume& v);

// Along t only: image sequence <-> x-f (k-space <-> k-f).
ComplexVolume fft_t(const ComplexVolume& v);
ComplexVolume ifft_t(const ComplexVolume& v);

double energy(const ComplexVolume& v) noexcept;

/// Euclidean inner product <a, b> = sum conj(a) * b.
cplx inner(const ComplexVolume& a, const ComplexVolume& b);

/// max |a - b| over all entries.
double max_abs_diff(const ComplexVolume& a, const ComplexVolume& b);

}  // namespace ktnext
