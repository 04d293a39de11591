#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <string>
#include <thread>

#include "ktnext/cli.hpp"

namespace ktnext::cli {

void write_pgm(const std::filesystem::path& path, std::size_t width, std::size_t height,
               const std::vector<double>& values) {
  if (values.size() != width * height) throw Error(ErrorCode::DimensionMismatch, "pgm payload size");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot create " + path.string());
  out << "P5\n" << width << ' ' << height << "\n255\n";
  std::string bytes(values.size(), '\0');
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = std::isfinite(values[i]) ? std::clamp(values[i], 0.0, 1.0) : 0.0;
    bytes[i] = static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0)));
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

namespace {
double safe(double peak) { return peak > 0.0 ? peak : 1.0; }
}  // namespace

std::vector<double> magnitude_frame(const ComplexVolume& v, std::size_t t, double peak) {
  std::vector<double> out(v.frame_size());
  for (std::size_t y = 0; y < v.rows(); ++y)
    for (std::size_t x = 0; x < v.cols(); ++x) out[y * v.cols() + x] = std::abs(v(t, y, x)) / safe(peak);
  return out;
}

std::vector<double> error_frame(const ComplexVolume& rec, const ComplexVolume& gt, std::size_t t, double peak,
                                double gain) {
  if (!rec.same_shape(gt)) throw Error(ErrorCode::DimensionMismatch, "error map operands differ");
  std::vector<double> out(rec.frame_size());
  for (std::size_t y = 0; y < rec.rows(); ++y)
    for (std::size_t x = 0; x < rec.cols(); ++x) {
      out[y * rec.cols() + x] = std::min(1.0, gain * std::abs(rec(t, y, x) - gt(t, y, x)) / safe(peak));
    }
  return out;
}

std::vector<double> xt_profile(const ComplexVolume& v, std::size_t row, double peak) {
  std::vector<double> out(v.t_frames() * v.cols());
  for (std::size_t t = 0; t < v.t_frames(); ++t)
    for (std::size_t x = 0; x < v.cols(); ++x) out[t * v.cols() + x] = std::abs(v(t, row, x)) / safe(peak);
  return out;
}

std::vector<double> xf_plane(const ComplexVolume& image_seq, std::size_t row) {
  ComplexVolume seq = image_seq;
  seq.set_domain(Domain::Image);
  const ComplexVolume xf = fft_t(seq);
  std::vector<double> out(xf.t_frames() * xf.cols());
  double peak = 0.0;
  for (std::size_t f = 0; f < xf.t_frames(); ++f)
    for (std::size_t x = 0; x < xf.cols(); ++x) {
      out[f * xf.cols() + x] = std::abs(xf(f, row, x));
      peak = std::max(peak, out[f * xf.cols() + x]);
    }
  for (auto& v : out) v /= safe(peak);
  return out;
}

unsigned thread_cap() {
  unsigned cap = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("KTNEXT_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) cap = std::min<unsigned>(cap, static_cast<unsigned>(v));
  }
  return cap;
}

}  // namespace ktnext::cli
