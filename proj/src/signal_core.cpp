#include "ktnext/signal_core.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "ktnext/error.hpp"

namespace ktnext {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid argument";
    case ErrorCode::DimensionMismatch: return "dimension mismatch";
    case ErrorCode::DomainMismatch: return "domain mismatch";
    case ErrorCode::ContractViolation: return "contract violation";
    case ErrorCode::BadMagic: return "bad magic";
    case ErrorCode::Truncated: return "truncated payload";
    case ErrorCode::DimensionOverflow: return "dimension overflow";
    case ErrorCode::Malformed: return "malformed file";
    case ErrorCode::Io: return "i/o error";
    case ErrorCode::NumericFailure: return "numeric failure";
    case ErrorCode::UndefinedMetric: return "undefined metric";
  }
  return "unknown error";
}

const char* to_string(Domain d) noexcept {
  switch (d) {
    case Domain::Image: return "image";
    case Domain::KSpace: return "k-space";
    case Domain::XF: return "x-f";
    case Domain::KF: return "k-f";
  }
  return "?";
}

ComplexVolume::ComplexVolume(std::size_t t_frames, std::size_t rows, std::size_t cols, Domain domain)
    : t_(t_frames), y_(rows), x_(cols), domain_(domain) {
  if (t_ == 0 || y_ == 0 || x_ == 0) {
    throw Error(ErrorCode::InvalidArgument, "volume dimensions must be >= 1");
  }
  data_.assign(t_ * y_ * x_, cplx{});
}

ComplexVolume::ComplexVolume(std::size_t t_frames, std::size_t rows, std::size_t cols, Domain domain,
                             std::vector<cplx> data)
    : t_(t_frames), y_(rows), x_(cols), domain_(domain), data_(std::move(data)) {
  if (t_ == 0 || y_ == 0 || x_ == 0) {
    throw Error(ErrorCode::InvalidArgument, "volume dimensions must be >= 1");
  }
  if (data_.size() != t_ * y_ * x_) {
    throw Error(ErrorCode::DimensionMismatch, "payload size does not match T*Y*X");
  }
  if (!all_finite()) {
    throw Error(ErrorCode::NumericFailure, "volume contains non-finite values");
  }
}

std::size_t ComplexVolume::extent(Axis axis) const noexcept {
  switch (axis) {
    case Axis::T: return t_;
    case Axis::Y: return y_;
    case Axis::X: return x_;
  }
  return 0;
}

bool ComplexVolume::all_finite() const noexcept {
  for (const auto& z : data_) {
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
  }
  return true;
}

namespace {

// One FFTW plan per (length, direction) and thread. Planning itself is not
// thread-safe in FFTW, execution with new-array functions is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

class LinePlan {
 public:
  LinePlan(std::size_t n, int sign) : n_(n) {
    in_ = fftw_alloc_complex(n);
    out_ = fftw_alloc_complex(n);
    std::lock_guard lock(planner_mutex());
    plan_ = fftw_plan_dft_1d(static_cast<int>(n), in_, out_, sign, FFTW_ESTIMATE);
  }
  ~LinePlan() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan_);
    fftw_free(in_);
    fftw_free(out_);
  }
  LinePlan(const LinePlan&) = delete;
  LinePlan& operator=(const LinePlan&) = delete;

  cplx* in() { return reinterpret_cast<cplx*>(in_); }
  const cplx* out() const { return reinterpret_cast<const cplx*>(out_); }
  void execute() { fftw_execute(plan_); }
  std::size_t size() const { return n_; }

 private:
  std::size_t n_;
  fftw_complex* in_;
  fftw_complex* out_;
  fftw_plan plan_;
};

LinePlan& line_plan(std::size_t n, int sign) {
  thread_local std::map<std::pair<std::size_t, int>, std::unique_ptr<LinePlan>> cache;
  auto& slot = cache[{n, sign}];
  if (!slot) slot = std::make_unique<LinePlan>(n, sign);
  return *slot;
}

Domain forward_domain(Domain d, Axis axis) {
  if (axis == Axis::T) {
    if (d == Domain::Image) return Domain::XF;
    if (d == Domain::KSpace) return Domain::KF;
    return d;
  }
  if (d == Domain::Image) return Domain::KSpace;
  if (d == Domain::XF) return Domain::KF;
  return d;
}

Domain inverse_domain(Domain d, Axis axis) {
  if (axis == Axis::T) {
    if (d == Domain::XF) return Domain::Image;
    if (d == Domain::KF) return Domain::KSpace;
    return d;
  }
  if (d == Domain::KSpace) return Domain::Image;
  if (d == Domain::KF) return Domain::XF;
  return d;
}

// Centered orthonormal DFT of every line along `axis`. Lines are gathered with
// an ifftshift, transformed, and scattered back with an fftshift.
ComplexVolume centered_transform(const ComplexVolume& v, Axis axis, int sign) {
  if (v.size() == 0) throw Error(ErrorCode::InvalidArgument, "empty volume");
  const std::size_t n = v.extent(axis);
  const std::size_t center = n / 2;
  const std::size_t stride = axis == Axis::T ? v.frame_size() : axis == Axis::Y ? v.cols() : 1;
  const std::size_t outer = axis == Axis::T ? 1 : axis == Axis::Y ? v.t_frames() : v.t_frames() * v.rows();
  const std::size_t inner = axis == Axis::T ? v.frame_size() : axis == Axis::Y ? v.cols() : 1;
  const std::size_t block = n * stride;
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));

  ComplexVolume out = v;
  out.set_domain(sign == FFTW_FORWARD ? forward_domain(v.domain(), axis) : inverse_domain(v.domain(), axis));
  if (n == 1) return out;

  LinePlan& plan = line_plan(n, sign);
  auto src = v.data();
  auto dst = out.data();
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t i = 0; i < inner; ++i) {
      const std::size_t base = o * block + i;
      cplx* line = plan.in();
      for (std::size_t m = 0; m < n; ++m) line[m] = src[base + ((m + center) % n) * stride];
      plan.execute();
      const cplx* spec = plan.out();
      for (std::size_t k = 0; k < n; ++k) {
        dst[base + k * stride] = spec[(k + n - center) % n] * scale;
      }
    }
  }
  return out;
}

}  // namespace

ComplexVolume fft1c(const ComplexVolume& v, Axis axis) { return centered_transform(v, axis, FFTW_FORWARD); }

ComplexVolume ifft1c(const ComplexVolume& v, Axis axis) { return centered_transform(v, axis, FFTW_BACKWARD); }

ComplexVolume fft2c(const ComplexVolume& v) {
  if (v.domain() != Domain::Image) {
    throw Error(ErrorCode::DomainMismatch,
                std::string("fft2c expects an image-domain volume, got ") + to_string(v.domain()));
  }
  return fft1c(fft1c(v, Axis::Y), Axis::X);
}

ComplexVolume ifft2c(const ComplexVolume& v) {
  if (v.domain() != Domain::KSpace) {
    throw Error(ErrorCode::DomainMismatch,
                std::string("ifft2c expects a k-space volume, got ") + to_string(v.domain()));
  }
  return ifft1c(ifft1c(v, Axis::Y), Axis::X);
}

ComplexVolume fft_t(const ComplexVolume& v) { return fft1c(v, Axis::T); }

ComplexVolume ifft_t(const ComplexVolume& v) { return ifft1c(v, Axis::T); }

double energy(const ComplexVolume& v) noexcept {
  double e = 0.0;
  for (const auto& z : v.data()) e += std::norm(z);
  return e;
}

cplx inner(const ComplexVolume& a, const ComplexVolume& b) {
  if (!a.same_shape(b)) throw Error(ErrorCode::DimensionMismatch, "inner product of unequal shapes");
  cplx acc{};
  auto da = a.data();
  auto db = b.data();
  for (std::size_t i = 0; i < da.size(); ++i) acc += std::conj(da[i]) * db[i];
  return acc;
}

double max_abs_diff(const ComplexVolume& a, const ComplexVolume& b) {
  if (!a.same_shape(b)) throw Error(ErrorCode::DimensionMismatch, "comparison of unequal shapes");
  double m = 0.0;
  auto da = a.data();
  auto db = b.data();
  for (std::size_t i = 0; i < da.size(); ++i) m = std::max(m, std::abs(da[i] - db[i]));
  return m;
}

}  // namespace ktnext
