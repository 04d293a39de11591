#include "ktnext/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ktnext/error.hpp"

namespace ktnext {

namespace {

void check_pair(const ComplexVolume& rec, const ComplexVolume& gt) {
  if (!rec.same_shape(gt)) throw Error(ErrorCode::DimensionMismatch, "metric operands differ in shape");
}

double peak_magnitude(const ComplexVolume& v) {
  double p = 0.0;
  for (const auto& z : v.data()) p = std::max(p, std::abs(z));
  return p;
}

std::vector<double> magnitude(const ComplexVolume& v) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::abs(v.data()[i]);
  return out;
}

}  // namespace

double psnr(const ComplexVolume& rec, const ComplexVolume& gt) {
  check_pair(rec, gt);
  const auto a = magnitude(rec);
  const auto b = magnitude(gt);
  double mse = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) mse += (a[i] - b[i]) * (a[i] - b[i]);
  mse /= static_cast<double>(a.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  const double peak = peak_magnitude(gt);
  if (peak == 0.0) throw Error(ErrorCode::UndefinedMetric, "PSNR of a zero reference");
  return 10.0 * std::log10(peak * peak / mse);
}

std::vector<double> gaussian_window(int size, double sigma) {
  std::vector<double> w(static_cast<std::size_t>(size));
  const double c = (size - 1) / 2.0;
  double total = 0.0;
  for (int i = 0; i < size; ++i) {
    w[static_cast<std::size_t>(i)] = std::exp(-(i - c) * (i - c) / (2.0 * sigma * sigma));
    total += w[static_cast<std::size_t>(i)];
  }
  for (auto& v : w) v /= total;
  return w;
}

double ssim(const ComplexVolume& rec, const ComplexVolume& gt) {
  check_pair(rec, gt);
  const double range = peak_magnitude(gt);
  if (range == 0.0) throw Error(ErrorCode::UndefinedMetric, "SSIM of a zero reference");
  const double c1 = (0.01 * range) * (0.01 * range);
  const double c2 = (0.03 * range) * (0.03 * range);
  const auto win = gaussian_window(11, 1.5);
  const long r = 5;
  const auto a = magnitude(rec);
  const auto b = magnitude(gt);
  const long Y = static_cast<long>(gt.rows()), X = static_cast<long>(gt.cols());

  double total = 0.0;
  for (std::size_t t = 0; t < gt.t_frames(); ++t) {
    const double* fa = a.data() + t * gt.frame_size();
    const double* fb = b.data() + t * gt.frame_size();
    double frame_sum = 0.0;
    for (long y = 0; y < Y; ++y) {
      for (long x = 0; x < X; ++x) {
        double wsum = 0, ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
        for (long dy = -r; dy <= r; ++dy) {
          const long yy = y + dy;
          if (yy < 0 || yy >= Y) continue;
          for (long dx = -r; dx <= r; ++dx) {
            const long xx = x + dx;
            if (xx < 0 || xx >= X) continue;
            const double w = win[static_cast<std::size_t>(dy + r)] * win[static_cast<std::size_t>(dx + r)];
            const double va = fa[yy * X + xx], vb = fb[yy * X + xx];
            wsum += w;
            ma += w * va;
            mb += w * vb;
            saa += w * va * va;
            sbb += w * vb * vb;
            sab += w * va * vb;
          }
        }
        ma /= wsum;
        mb /= wsum;
        const double var_a = saa / wsum - ma * ma;
        const double var_b = sbb / wsum - mb * mb;
        const double cov = sab / wsum - ma * mb;
        frame_sum += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (var_a + var_b + c2));
      }
    }
    total += frame_sum / static_cast<double>(Y * X);
  }
  return total / static_cast<double>(gt.t_frames());
}

std::vector<double> log_kernel(int size, double sigma) {
  const double c = (size - 1) / 2.0;
  const double s2 = sigma * sigma;
  std::vector<double> g(static_cast<std::size_t>(size * size));
  double gsum = 0.0;
  for (int i = 0; i < size; ++i)
    for (int j = 0; j < size; ++j) {
      const double r2 = (i - c) * (i - c) + (j - c) * (j - c);
      g[static_cast<std::size_t>(i * size + j)] = std::exp(-r2 / (2.0 * s2));
      gsum += g[static_cast<std::size_t>(i * size + j)];
    }
  std::vector<double> h(g.size());
  double hsum = 0.0;
  for (int i = 0; i < size; ++i)
    for (int j = 0; j < size; ++j) {
      const double r2 = (i - c) * (i - c) + (j - c) * (j - c);
      const auto k = static_cast<std::size_t>(i * size + j);
      h[k] = (g[k] / gsum) * (r2 - 2.0 * s2) / (s2 * s2);
      hsum += h[k];
    }
  for (auto& v : h) v -= hsum / static_cast<double>(h.size());
  return h;
}

namespace {

// Correlation with zero padding, same output size.
std::vector<double> filter_frame(const double* img, long Y, long X, const std::vector<double>& k, int size) {
  const long r = size / 2;
  std::vector<double> out(static_cast<std::size_t>(Y * X), 0.0);
  for (long y = 0; y < Y; ++y)
    for (long x = 0; x < X; ++x) {
      double acc = 0.0;
      for (long i = -r; i <= r; ++i) {
        const long yy = y + i;
        if (yy < 0 || yy >= Y) continue;
        for (long j = -r; j <= r; ++j) {
          const long xx = x + j;
          if (xx < 0 || xx >= X) continue;
          acc += k[static_cast<std::size_t>((i + r) * size + (j + r))] * img[yy * X + xx];
        }
      }
      out[static_cast<std::size_t>(y * X + x)] = acc;
    }
  return out;
}

}  // namespace

double hfen(const ComplexVolume& rec, const ComplexVolume& gt) {
  check_pair(rec, gt);
  const auto kernel = log_kernel(15, 1.5);
  const auto a = magnitude(rec);
  const auto b = magnitude(gt);
  const long Y = static_cast<long>(gt.rows()), X = static_cast<long>(gt.cols());
  double num = 0.0, den = 0.0;
  for (std::size_t t = 0; t < gt.t_frames(); ++t) {
    const auto la = filter_frame(a.data() + t * gt.frame_size(), Y, X, kernel, 15);
    const auto lb = filter_frame(b.data() + t * gt.frame_size(), Y, X, kernel, 15);
    for (std::size_t i = 0; i < la.size(); ++i) {
      num += (la[i] - lb[i]) * (la[i] - lb[i]);
      den += lb[i] * lb[i];
    }
  }
  if (den == 0.0) throw Error(ErrorCode::UndefinedMetric, "HFEN reference has zero LoG energy");
  return std::sqrt(num) / std::sqrt(den);
}

ReconMetrics evaluate(const ComplexVolume& rec, const ComplexVolume& gt) {
  return ReconMetrics{psnr(rec, gt), ssim(rec, gt), hfen(rec, gt)};
}

}  // namespace ktnext
