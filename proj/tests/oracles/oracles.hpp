#pragma once

// Independent reference implementations used only by the tests. They share
// no numerical code with the library and favour obviousness over speed.

#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include "vitlens/bundle.hpp"
#include "vitlens/model.hpp"
#include "vitlens/tensor.hpp"

namespace oracle {

using Real = long double;

// Plain row-major matrix of long doubles.
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<Real> v;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), v(static_cast<std::size_t>(r) * c, 0.0L) {}
  Real& operator()(int i, int j) { return v[static_cast<std::size_t>(i) * cols + j]; }
  Real operator()(int i, int j) const { return v[static_cast<std::size_t>(i) * cols + j]; }
};

// Test-side randomness, independent of vitlens::Rng.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : engine_(seed ^ 0xA5A5A5A5DEADBEEFull) {}
  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

vitlens::Tensor random_tensor(Gen& gen, const vitlens::Shape& shape, double scale = 1.0);

// [H, N, N] attention with rows drawn from a Dirichlet-like distribution;
// `sharpness` > 1 concentrates mass.
vitlens::Tensor random_attention(Gen& gen, int heads, int n, double sharpness = 1.0);

// Structurally valid bundle with random config, attention, representations
// and a random number of extras.
vitlens::ActivationBundle random_bundle(Gen& gen);

// X[u,v] = sum_x sum_y g[x,y] exp(-2 pi i (u x / h + v y / w)).
std::vector<std::complex<Real>> naive_dft(const std::vector<double>& grid, int h, int w);

// Singular values (descending) as square roots of the eigenvalues of A^T A,
// found by cyclic Jacobi rotations in long double.
std::vector<Real> singular_values_via_gram(const std::vector<double>& a, int m, int n);

// Eigenvalues of a symmetric matrix by cyclic Jacobi, descending.
std::vector<Real> symmetric_eigenvalues(Mat s);

// Orthogonal Q from Householder QR of a Gaussian matrix, signs fixed so that
// Q is Haar distributed.
Mat random_orthogonal(Gen& gen, int n);

// NMI of one [N, N] head from the explicit joint p(q,k) = A[q,k] / N with
// p(q) = 1/N. Returns 0 when H(k) vanishes.
Real brute_force_nmi(const vitlens::Tensor& attn, int head, bool drop_first_token);

// Attention-weighted query/key distance averaged over spatial queries. A
// leading CLS token (N == grid + 1) is ignored as a query and contributes
// zero distance as a key, or is removed with row renormalization when
// exclude_cls is set.
Real brute_force_distance(const vitlens::Tensor& attn, int head, int grid_h, int grid_w, double patch_px,
                          bool exclude_cls);

struct NaiveActivations {
  std::vector<std::vector<Real>> attention;        // per layer, [H*N*N]
  std::vector<std::vector<Real>> representations;  // per depth, [N*D]
};

// Straight-line ViT forward pass in long double. `mask` is [N, N] (1 = key
// admitted) or empty for full attention.
NaiveActivations naive_vit(const vitlens::Tensor& image, const vitlens::Weights& weights,
                           const vitlens::ModelConfig& config, const std::vector<int>& mask = {},
                           int uniform_from = -1);

}  // namespace oracle
