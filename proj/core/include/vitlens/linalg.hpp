#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "vitlens/tensor.hpp"

namespace vitlens {

/// Row-major double matrix for numerics that need more headroom than float32.
class DMatrix {
 public:
  DMatrix() = default;
  DMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static DMatrix from_tensor(const Tensor& t);
  static DMatrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }
  double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }

  std::span<const double> row(std::size_t i) const noexcept {
    return std::span<const double>(data_).subspan(i * cols_, cols_);
  }
  std::span<double> row(std::size_t i) noexcept { return std::span<double>(data_).subspan(i * cols_, cols_); }
  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }

  DMatrix transposed() const;
  double frobenius_norm() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

DMatrix matmul(const DMatrix& a, const DMatrix& b);

struct SvdResult {
  std::vector<double> singular_values;  // descending, non-negative, length min(m, n)
  std::optional<DMatrix> u;             // [m, k]
  std::optional<DMatrix> v;             // [n, k]
};

/// One-sided (Hestenes) Jacobi SVD. Throws NumericalError on non-finite input.
SvdResult svd(const DMatrix& a, bool compute_factors = false);
SvdResult svd(const Tensor& a, bool compute_factors = false);

}  // namespace vitlens
