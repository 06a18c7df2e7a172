#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "vitlens/rng.hpp"

using namespace vitlens;

TEST(Rng, DeterministicStreams) {
  Rng a(42), b(42), c(43);
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next();
    EXPECT_EQ(x, b.next());
    (void)c;
  }
  EXPECT_NE(Rng(42).next(), Rng(43).next());
  EXPECT_NE(mix_seed(1, 0), mix_seed(1, 1));
  EXPECT_NE(mix_seed(0, 1), mix_seed(1, 0));
}

TEST(Rng, UniformAndBelowRanges) {
  Rng rng(3);
  std::vector<int> counts(5, 0);
  for (int i = 0; i < 50000; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    const auto k = rng.below(5);
    ASSERT_LT(k, 5u);
    ++counts[k];
  }
  for (int c : counts) EXPECT_NEAR(c / 50000.0, 0.2, 0.01);
}

TEST(Rng, NormalMoments) {
  Rng rng(11);
  const int n = 200000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    sum += x;
    sq += x * x;
  }
  EXPECT_NEAR(sum / n, 0.0, 0.01);
  EXPECT_NEAR(sq / n, 1.0, 0.01);
}

TEST(Rng, TruncatedNormalMatchesAnalyticStd) {
  Rng rng(5);
  const int n = 200000;
  double sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.truncated_normal(0.02);
    ASSERT_LE(std::abs(x), 0.04);
    sq += x * x;
  }
  // Truncation at two standard deviations: std factor sqrt(1 - 2*2*phi(2)/(2*Phi(2)-1)).
  EXPECT_NEAR(truncated_normal_std(1.0), 0.87962566103423978, 1e-12);
  EXPECT_NEAR(std::sqrt(sq / n), truncated_normal_std(0.02), 2e-4);
}

TEST(Rng, ShuffleIsAPermutation) {
  std::vector<int> v(100);
  std::iota(v.begin(), v.end(), 0);
  Rng rng(9);
  rng.shuffle(std::span<int>(v));
  auto sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 100; ++i) EXPECT_EQ(sorted[i], i);
  std::vector<int> w(100);
  std::iota(w.begin(), w.end(), 0);
  Rng again(9);
  again.shuffle(std::span<int>(w));
  EXPECT_EQ(v, w);
}
