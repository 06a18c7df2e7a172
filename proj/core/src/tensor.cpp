#include "vitlens/tensor.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

#include "vitlens/error.hpp"

namespace vitlens {

std::string shape_to_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << ',';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

std::int64_t shape_numel(const Shape& shape) {
  std::int64_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

namespace {

void check_shape(const Shape& shape) {
  require(!shape.empty(), ErrorCode::kShapeError, "tensor rank must be >= 1");
  for (auto d : shape) {
    require(d >= 1, ErrorCode::kShapeError,
            "tensor dimensions must be >= 1, got " + shape_to_string(shape));
  }
}

}  // namespace

Tensor::Tensor(Shape shape, float fill) : shape_(std::move(shape)) {
  check_shape(shape_);
  data_.assign(static_cast<std::size_t>(shape_numel(shape_)), fill);
}

Tensor::Tensor(Shape shape, std::vector<float> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  check_shape(shape_);
  require(static_cast<std::int64_t>(data_.size()) == shape_numel(shape_), ErrorCode::kShapeError,
          "data length " + std::to_string(data_.size()) + " does not match shape " +
              shape_to_string(shape_));
}

std::int64_t Tensor::dim(int axis) const {
  require(axis >= 0 && axis < rank(), ErrorCode::kShapeError,
          "axis " + std::to_string(axis) + " out of range for shape " + shape_to_string(shape_));
  return shape_[static_cast<std::size_t>(axis)];
}

Tensor Tensor::slice(std::int64_t index) const {
  require(rank() >= 2, ErrorCode::kShapeError, "slice requires rank >= 2");
  require(index >= 0 && index < shape_[0], ErrorCode::kShapeError, "slice index out of range");
  Shape sub(shape_.begin() + 1, shape_.end());
  const auto stride = static_cast<std::size_t>(shape_numel(sub));
  const auto begin = data_.begin() + static_cast<std::ptrdiff_t>(stride * static_cast<std::size_t>(index));
  return Tensor(std::move(sub), std::vector<float>(begin, begin + static_cast<std::ptrdiff_t>(stride)));
}

std::span<const float> Tensor::row(std::int64_t i) const {
  const auto cols = static_cast<std::size_t>(shape_[1]);
  return std::span<const float>(data_).subspan(static_cast<std::size_t>(i) * cols, cols);
}

Tensor Tensor::reshaped(Shape shape) const {
  require(shape_numel(shape) == static_cast<std::int64_t>(data_.size()), ErrorCode::kShapeError,
          "cannot reshape " + shape_to_string(shape_) + " to " + shape_to_string(shape));
  return Tensor(std::move(shape), data_);
}

bool Tensor::all_finite() const noexcept {
  for (float v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

bool bit_equal(const Tensor& a, const Tensor& b) noexcept {
  return a.shape() == b.shape() &&
         std::memcmp(a.ptr(), b.ptr(), a.size() * sizeof(float)) == 0;
}

}  // namespace vitlens
