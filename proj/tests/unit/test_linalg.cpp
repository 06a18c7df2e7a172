#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "test_helpers.hpp"
#include "vitlens/linalg.hpp"

using namespace vitlens;

namespace {

DMatrix random_matrix(oracle::Gen& gen, std::size_t m, std::size_t n) {
  DMatrix a(m, n);
  for (double& v : a.data()) v = gen.normal();
  return a;
}

std::vector<double> as_vector(const DMatrix& a) { return {a.data().begin(), a.data().end()}; }

}  // namespace

TEST(Svd, Identity) {
  const auto r = svd(DMatrix::identity(3));
  ASSERT_EQ(r.singular_values.size(), 3u);
  for (double s : r.singular_values) EXPECT_NEAR(s, 1.0, 1e-15);
}

TEST(Svd, RankOneOuterProduct) {
  const std::vector<double> u{1.0, -2.0, 0.5, 3.0}, v{2.0, 1.0, -1.0};
  DMatrix a(4, 3);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 3; ++j) a(i, j) = u[i] * v[j];
  const auto r = svd(a);
  EXPECT_NEAR(r.singular_values[0], std::sqrt(14.25) * std::sqrt(6.0), 1e-12);
  EXPECT_NEAR(r.singular_values[1], 0.0, 1e-6);
  EXPECT_NEAR(r.singular_values[2], 0.0, 1e-6);
}

TEST(Svd, RandomFourByThreeMatchesGramOracle) {
  oracle::Gen gen(43);
  const auto a = random_matrix(gen, 4, 3);
  const auto r = svd(a);
  const auto ref = oracle::singular_values_via_gram(as_vector(a), 4, 3);
  for (int i = 0; i < 3; ++i) {
    const double s2 = r.singular_values[i] * r.singular_values[i];
    EXPECT_NEAR(s2, static_cast<double>(ref[i] * ref[i]), 1e-6 * static_cast<double>(ref[i] * ref[i]));
  }
}

TEST(Svd, RandomShapesMatchOracle) {
  oracle::Gen gen(44);
  for (int trial = 0; trial < 40; ++trial) {
    const auto m = static_cast<std::size_t>(gen.integer(1, 20));
    const auto n = static_cast<std::size_t>(gen.integer(1, 20));
    const auto a = random_matrix(gen, m, n);
    const auto r = svd(a);
    const auto ref = oracle::singular_values_via_gram(as_vector(a), static_cast<int>(m), static_cast<int>(n));
    ASSERT_EQ(r.singular_values.size(), std::min(m, n));
    for (std::size_t i = 0; i < ref.size(); ++i) {
      EXPECT_NEAR(r.singular_values[i], static_cast<double>(ref[i]), 1e-6 * static_cast<double>(ref[i]))
          << m << "x" << n << " index " << i;
      if (i > 0) EXPECT_LE(r.singular_values[i], r.singular_values[i - 1]);
    }
  }
}

TEST(Svd, FactorsReconstruct) {
  oracle::Gen gen(45);
  for (auto [m, n] : {std::pair{6, 4}, std::pair{4, 6}, std::pair{5, 5}, std::pair{1, 7}}) {
    const auto a = random_matrix(gen, m, n);
    const auto r = svd(a, true);
    ASSERT_TRUE(r.u && r.v);
    const std::size_t k = r.singular_values.size();
    DMatrix rebuilt(m, n);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j)
        for (std::size_t s = 0; s < k; ++s) rebuilt(i, j) += (*r.u)(i, s) * r.singular_values[s] * (*r.v)(j, s);
    double err = 0;
    for (std::size_t i = 0; i < a.data().size(); ++i) err += std::pow(a.data()[i] - rebuilt.data()[i], 2);
    EXPECT_LE(std::sqrt(err), 1e-4 * a.frobenius_norm());
    EXPECT_LE(std::sqrt(err), 1e-10 * a.frobenius_norm());
  }
}

TEST(Svd, FrobeniusRotationScaling) {
  oracle::Gen gen(46);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = gen.integer(2, 12);
    const auto a = random_matrix(gen, n, n);
    const auto s = svd(a).singular_values;
    double sq = 0;
    for (double v : s) sq += v * v;
    EXPECT_NEAR(sq, a.frobenius_norm() * a.frobenius_norm(), 1e-10 * sq);

    const auto q = oracle::random_orthogonal(gen, n);
    DMatrix qa(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) qa(i, j) += static_cast<double>(q(i, k)) * a(k, j);
    const auto sq_rot = svd(qa).singular_values;
    for (int i = 0; i < n; ++i) EXPECT_NEAR(sq_rot[i], s[i], 1e-6 * s[0]);

    DMatrix scaled = a;
    for (double& v : scaled.data()) v *= -2.5;
    const auto ss = svd(scaled).singular_values;
    for (int i = 0; i < n; ++i) EXPECT_NEAR(ss[i], 2.5 * s[i], 1e-12 * s[0]);
  }
}

TEST(Svd, NonFiniteInput) {
  DMatrix a(2, 2, 1.0);
  a(1, 0) = std::nan("");
  EXPECT_ERROR(svd(a), kNumericalError);
  Tensor t(Shape{2, 2}, 1.0f);
  t[0] = std::numeric_limits<float>::infinity();
  EXPECT_ERROR(svd(t), kNumericalError);
}

TEST(Matmul, SmallProduct) {
  DMatrix a(2, 3), b(3, 2);
  double v = 1;
  for (double& x : a.data()) x = v++;
  for (double& x : b.data()) x = v++;
  const auto c = matmul(a, b);
  EXPECT_DOUBLE_EQ(c(0, 0), 1 * 7 + 2 * 9 + 3 * 11);
  EXPECT_DOUBLE_EQ(c(1, 1), 4 * 8 + 5 * 10 + 6 * 12);
  EXPECT_DOUBLE_EQ(a.transposed()(2, 1), 6.0);
}
