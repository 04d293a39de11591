#include "ktnext/nn/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "ktnext/error.hpp"

namespace ktnext::nn {

std::string to_string(const Shape& s) {
  return "[" + std::to_string(s.n) + "," + std::to_string(s.c) + "," + std::to_string(s.h) + "," +
         std::to_string(s.w) + "]";
}

Tensor::Tensor(Shape shape, double fill) : shape_(shape), values_(shape.size(), fill) {
  if (shape.size() == 0) throw Error(ErrorCode::InvalidArgument, "tensor dims must be >= 1");
}

Tensor::Tensor(Shape shape, std::vector<double> values) : shape_(shape), values_(std::move(values)) {
  if (shape.size() == 0) throw Error(ErrorCode::InvalidArgument, "tensor dims must be >= 1");
  if (values_.size() != shape.size()) {
    throw Error(ErrorCode::DimensionMismatch, "tensor payload does not match " + to_string(shape));
  }
}

Tensor& Tensor::operator+=(const Tensor& other) {
  if (!(shape_ == other.shape_)) {
    throw Error(ErrorCode::DimensionMismatch, to_string(shape_) + " += " + to_string(other.shape_));
  }
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

void Tensor::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

bool Tensor::all_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace ktnext::nn
