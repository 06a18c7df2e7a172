#include "vitlens/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "vitlens/error.hpp"

namespace vitlens {

DMatrix DMatrix::from_tensor(const Tensor& t) {
  require(t.rank() == 2, ErrorCode::kShapeError, "expected a matrix, got " + shape_to_string(t.shape()));
  DMatrix m(static_cast<std::size_t>(t.dim(0)), static_cast<std::size_t>(t.dim(1)));
  std::copy(t.data().begin(), t.data().end(), m.data_.begin());
  return m;
}

DMatrix DMatrix::identity(std::size_t n) {
  DMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DMatrix DMatrix::transposed() const {
  DMatrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  }
  return t;
}

double DMatrix::frobenius_norm() const {
  double s = 0.0;
  for (double v : data_) s += v * v;
  return std::sqrt(s);
}

DMatrix matmul(const DMatrix& a, const DMatrix& b) {
  require(a.cols() == b.rows(), ErrorCode::kShapeError, "matmul dimension mismatch");
  DMatrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  }
  return c;
}

namespace {

constexpr int kMaxSweeps = 80;
constexpr double kOrthogonalityTol = 1e-15;

// Works column-wise on a column-major copy: cols[j] is column j of A (length m).
SvdResult hestenes(const DMatrix& a, bool compute_factors) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  std::vector<std::vector<double>> cols(n, std::vector<double>(m));
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) cols[j][i] = a(i, j);
  }
  std::vector<std::vector<double>> v;
  if (compute_factors) {
    v.assign(n, std::vector<double>(n, 0.0));
    for (std::size_t j = 0; j < n; ++j) v[j][j] = 1.0;
  }

  auto rotate = [](std::vector<double>& x, std::vector<double>& y, double c, double s) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double xi = x[i];
      x[i] = c * xi - s * y[i];
      y[i] = s * xi + c * y[i];
    }
  };

  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
          alpha += cols[p][i] * cols[p][i];
          beta += cols[q][i] * cols[q][i];
          gamma += cols[p][i] * cols[q][i];
        }
        if (gamma == 0.0 || std::abs(gamma) <= kOrthogonalityTol * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        rotate(cols[p], cols[q], c, s);
        if (compute_factors) rotate(v[p], v[q], c, s);
      }
    }
    if (!rotated) break;
  }

  std::vector<double> sigma(n);
  for (std::size_t j = 0; j < n; ++j) {
    double s = 0.0;
    for (double x : cols[j]) s += x * x;
    sigma[j] = std::sqrt(s);
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return sigma[x] > sigma[y]; });

  SvdResult result;
  const std::size_t k = std::min(m, n);
  for (std::size_t r = 0; r < k; ++r) result.singular_values.push_back(sigma[order[r]]);
  if (compute_factors) {
    DMatrix u(m, k), vm(n, k);
    for (std::size_t r = 0; r < k; ++r) {
      const std::size_t j = order[r];
      for (std::size_t i = 0; i < m; ++i) u(i, r) = sigma[j] > 0.0 ? cols[j][i] / sigma[j] : 0.0;
      for (std::size_t i = 0; i < n; ++i) vm(i, r) = v[j][i];
    }
    result.u = std::move(u);
    result.v = std::move(vm);
  }
  return result;
}

}  // namespace

SvdResult svd(const DMatrix& a, bool compute_factors) {
  require(a.rows() >= 1 && a.cols() >= 1, ErrorCode::kShapeError, "svd of an empty matrix");
  for (double x : a.data()) require(std::isfinite(x), ErrorCode::kNumericalError, "svd input is not finite");
  if (a.rows() >= a.cols()) return hestenes(a, compute_factors);
  // Wide matrix: decompose the transpose and swap the factors.
  SvdResult r = hestenes(a.transposed(), compute_factors);
  std::swap(r.u, r.v);
  return r;
}

SvdResult svd(const Tensor& a, bool compute_factors) { return svd(DMatrix::from_tensor(a), compute_factors); }

}  // namespace vitlens
