#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace vitlens {

using Shape = std::vector<std::int64_t>;

std::string shape_to_string(const Shape& shape);
std::int64_t shape_numel(const Shape& shape);

/// Dense row-major float32 array. A default-constructed tensor is empty
/// (rank 0) and only used as a placeholder; every constructed tensor has
/// rank >= 1 and all dimensions >= 1.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, float fill = 0.0f);
  Tensor(Shape shape, std::vector<float> data);

  const Shape& shape() const noexcept { return shape_; }
  int rank() const noexcept { return static_cast<int>(shape_.size()); }
  std::int64_t dim(int axis) const;
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<const float> data() const noexcept { return data_; }
  std::span<float> data() noexcept { return data_; }
  const float* ptr() const noexcept { return data_.data(); }
  float* ptr() noexcept { return data_.data(); }

  float operator[](std::size_t i) const noexcept { return data_[i]; }
  float& operator[](std::size_t i) noexcept { return data_[i]; }

  float at(std::int64_t i, std::int64_t j) const noexcept {
    return data_[static_cast<std::size_t>(i * shape_[1] + j)];
  }
  float& at(std::int64_t i, std::int64_t j) noexcept {
    return data_[static_cast<std::size_t>(i * shape_[1] + j)];
  }
  float at(std::int64_t i, std::int64_t j, std::int64_t k) const noexcept {
    return data_[static_cast<std::size_t>((i * shape_[1] + j) * shape_[2] + k)];
  }
  float& at(std::int64_t i, std::int64_t j, std::int64_t k) noexcept {
    return data_[static_cast<std::size_t>((i * shape_[1] + j) * shape_[2] + k)];
  }

  /// Copy of the sub-tensor at `index` along the leading axis.
  Tensor slice(std::int64_t index) const;

  /// Row `i` of a rank-2 tensor.
  std::span<const float> row(std::int64_t i) const;

  Tensor reshaped(Shape shape) const;

  bool all_finite() const noexcept;

 private:
  Shape shape_;
  std::vector<float> data_;
};

/// Bit-exact equality: same shape and identical float bit patterns.
bool bit_equal(const Tensor& a, const Tensor& b) noexcept;

}  // namespace vitlens
