#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace ktnext::nn {

/// [n][c][h][w]; complex data enters as c = 2 (real, imaginary).
struct Shape {
  std::size_t n = 1, c = 1, h = 1, w = 1;

  std::size_t size() const noexcept { return n * c * h * w; }
  friend bool operator==(const Shape&, const Shape&) = default;
};

std::string to_string(const Shape& s);

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> values);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  double& operator()(std::size_t n, std::size_t c, std::size_t h, std::size_t w) {
    return values_[((n * shape_.c + c) * shape_.h + h) * shape_.w + w];
  }
  const double& operator()(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const {
    return values_[((n * shape_.c + c) * shape_.h + h) * shape_.w + w];
  }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }

  Tensor& operator+=(const Tensor& other);
  void fill(double v);
  bool all_finite() const noexcept;

 private:
  Shape shape_{0, 0, 0, 0};
  std::vector<double> values_;
};

}  // namespace ktnext::nn
