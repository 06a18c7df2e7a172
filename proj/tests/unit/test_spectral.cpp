#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "test_helpers.hpp"
#include "vitlens/spectral.hpp"

using namespace vitlens;

namespace {

std::vector<double> to_vector(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

// Oracle-side radial frequency with a tie tolerance at band edges.
bool in_band(int u, int v, int h, int w, const FrequencyBand& band) {
  auto centered = [](int i, int n) { return 2 * i < n ? i : (2 * i == n ? -i : i - n); };
  const long double fu = centered(u, h) / (h / 2.0L), fv = centered(v, w) / (w / 2.0L);
  const long double r = std::min(1.0L, std::sqrt((fu * fu + fv * fv) / 2.0L));
  return r >= band.low - 1e-9 && r <= band.high + 1e-9;
}

}  // namespace

TEST(Dft, ConstantGridIsDcOnly) {
  const Tensor g(Shape{4, 6}, 2.5f);
  const auto x = dft2(g);
  EXPECT_NEAR(x.re[0], 2.5 * 24, 1e-12);
  for (int u = 0; u < 4; ++u)
    for (int v = 0; v < 6; ++v)
      if (u || v) EXPECT_LE(x.magnitude(u, v), 1e-6 * 2.5 * 24);
}

TEST(Dft, ImpulseIsFlat) {
  Tensor g(Shape{5, 3}, 0.0f);
  g.at(0, 0) = 1.0f;
  const auto x = dft2(g);
  for (int u = 0; u < 5; ++u)
    for (int v = 0; v < 3; ++v) EXPECT_NEAR(x.magnitude(u, v), 1.0, 1e-15);
}

TEST(Dft, RandomFiveBySevenMatchesQuadrupleLoop) {
  oracle::Gen gen(57);
  const auto g = oracle::random_tensor(gen, {5, 7});
  const auto x = dft2(g);
  const auto ref = oracle::naive_dft(to_vector(g), 5, 7);
  for (std::size_t i = 0; i < ref.size(); ++i) {
    EXPECT_NEAR(x.re[i], static_cast<double>(ref[i].real()), 1e-6);
    EXPECT_NEAR(x.im[i], static_cast<double>(ref[i].imag()), 1e-6);
  }
}

TEST(Dft, ParsevalLinearityAndInverse) {
  oracle::Gen gen(58);
  for (int trial = 0; trial < 10; ++trial) {
    const int h = gen.integer(1, 12), w = gen.integer(1, 12);
    const auto g1 = oracle::random_tensor(gen, {h, w});
    const auto g2 = oracle::random_tensor(gen, {h, w});
    const auto x1 = dft2(g1);
    double spatial = 0, freq = 0;
    for (float v : g1.data()) spatial += static_cast<double>(v) * v;
    for (std::size_t i = 0; i < x1.re.size(); ++i) freq += x1.re[i] * x1.re[i] + x1.im[i] * x1.im[i];
    EXPECT_NEAR(spatial, freq / (h * w), 1e-6 * spatial);

    const double a = 1.5, b = -0.75;
    Tensor mix(Shape{h, w});
    ComplexGrid mix_grid(h, w);
    for (std::size_t i = 0; i < mix.size(); ++i) mix_grid.re[i] = a * g1[i] + b * g2[i];
    const auto xm = dft2(mix_grid);
    const auto x2 = dft2(g2);
    for (std::size_t i = 0; i < xm.re.size(); ++i) {
      EXPECT_NEAR(xm.re[i], a * x1.re[i] + b * x2.re[i], 1e-6);
      EXPECT_NEAR(xm.im[i], a * x1.im[i] + b * x2.im[i], 1e-6);
    }

    const auto back = idft2(x1);
    for (std::size_t i = 0; i < back.re.size(); ++i) {
      EXPECT_NEAR(back.re[i], g1[i], 1e-12);
      EXPECT_NEAR(back.im[i], 0.0, 1e-12);
    }
  }
}

TEST(Frequency, CenteredIndexAndRadius) {
  EXPECT_EQ(centered_index(0, 4), 0);
  EXPECT_EQ(centered_index(1, 4), 1);
  EXPECT_EQ(centered_index(2, 4), -2);
  EXPECT_EQ(centered_index(3, 4), -1);
  EXPECT_EQ(centered_index(2, 5), 2);
  EXPECT_EQ(centered_index(3, 5), -2);
  EXPECT_EQ(radial_frequency(0, 0, 8, 8), 0.0);
  EXPECT_NEAR(radial_frequency(4, 4, 8, 8), 1.0, 1e-15);
  EXPECT_NEAR(radial_frequency(4, 0, 8, 8), std::sqrt(0.5), 1e-15);
  EXPECT_LE(radial_frequency(2, 2, 5, 5), 1.0);
}

TEST(Frequency, BandsTileUnitInterval) {
  const auto bands = tile_bands(0.1);
  ASSERT_EQ(bands.size(), 10u);
  EXPECT_EQ(bands.front().low, 0.0);
  EXPECT_EQ(bands.back().high, 1.0);
  for (std::size_t i = 1; i < bands.size(); ++i) EXPECT_DOUBLE_EQ(bands[i].low, bands[i - 1].high);
  for (const auto& b : bands) EXPECT_NEAR(b.window(), 0.1, 1e-12);
  EXPECT_ERROR((FrequencyBand{0.5, 0.5}.validate()), kInvalidBand);
  EXPECT_ERROR((FrequencyBand{-0.1, 0.5}.validate()), kInvalidBand);
  EXPECT_ERROR((FrequencyBand{0.2, 1.1}.validate()), kInvalidBand);
}

TEST(RelativeLogAmplitude, ConstantMapIsDcOnly) {
  Tensor reprs(Shape{16, 2}, 3.0f);
  const auto s = relative_log_amplitude(reprs, 4, 4, false);
  ASSERT_GE(s.bins.size(), 2u);
  EXPECT_NEAR(s.bins.front().frequency, 0.5 / 11, 1e-15);
  EXPECT_EQ(s.bins.front().count, 2u);  // DC of each channel
  EXPECT_NEAR(s.bins.front().mean_log_amplitude, std::log(48.0 + kAmplitudeEpsilon), 1e-12);
  EXPECT_NEAR(s.bins.back().mean_log_amplitude, std::log(kAmplitudeEpsilon), 1e-6);
  EXPECT_NEAR(s.delta_log_amplitude, std::log(kAmplitudeEpsilon) - std::log(48.0), 1e-6);
  for (std::size_t i = 1; i < s.bins.size(); ++i) EXPECT_GT(s.bins[i].frequency, s.bins[i - 1].frequency);
}

TEST(RelativeLogAmplitude, ImpulseIsFlat) {
  Tensor reprs(Shape{10, 3}, 0.0f);  // CLS + 3x3 grid
  for (int c = 0; c < 3; ++c) reprs.at(1, c) = 2.0f;
  reprs.at(0, 0) = 99.0f;  // CLS is ignored
  const auto s = relative_log_amplitude(reprs, 3, 3, true);
  for (const auto& b : s.bins) EXPECT_NEAR(b.mean_log_amplitude, std::log(2.0 + kAmplitudeEpsilon), 1e-12);
  EXPECT_NEAR(s.delta_log_amplitude, 0.0, 1e-6);
}

TEST(RelativeLogAmplitude, CheckerboardMatchesManualBinning) {
  // cos(pi x) along rows of a 4x4 grid: all energy at (u=2, v=0), radius sqrt(0.5).
  Tensor reprs(Shape{16, 1});
  for (int x = 0; x < 4; ++x)
    for (int y = 0; y < 4; ++y) reprs.at(x * 4 + y, 0) = static_cast<float>(std::cos(std::numbers::pi * x));
  const auto ref = oracle::naive_dft(to_vector(reprs), 4, 4);
  std::vector<long double> sum(11, 0);
  std::vector<int> count(11, 0);
  for (int u = 0; u < 4; ++u) {
    for (int v = 0; v < 4; ++v) {
      auto centered = [](int i) { return i <= 1 ? i : i - 4; };
      const long double r = std::sqrt((centered(u) * centered(u) + centered(v) * centered(v)) / 8.0L);
      const int bin = std::min(10, static_cast<int>(r * 11));
      sum[bin] += std::log(std::abs(ref[u * 4 + v]) + 1e-8L);
      ++count[bin];
    }
  }
  const auto s = relative_log_amplitude(reprs, 4, 4, false);
  std::size_t k = 0;
  for (int b = 0; b < 11; ++b) {
    if (!count[b]) continue;
    ASSERT_LT(k, s.bins.size());
    EXPECT_EQ(s.bins[k].count, static_cast<std::size_t>(count[b]));
    EXPECT_NEAR(s.bins[k].mean_log_amplitude, static_cast<double>(sum[b] / count[b]), 1e-6);
    ++k;
  }
  EXPECT_EQ(k, s.bins.size());
  // The largest mean sits in the bin holding (2, 0).
  const int peak = static_cast<int>(std::sqrt(0.5) * 11);
  double best = -1e9;
  double peak_freq = 0;
  for (const auto& b : s.bins) {
    if (b.mean_log_amplitude > best) {
      best = b.mean_log_amplitude;
      peak_freq = b.frequency;
    }
  }
  EXPECT_NEAR(peak_freq, (peak + 0.5) / 11, 1e-12);
}

TEST(RelativeLogAmplitude, ChannelOffsetOnlyMovesDcBin) {
  oracle::Gen gen(60);
  auto reprs = oracle::random_tensor(gen, {64, 4});
  const auto a = relative_log_amplitude(reprs, 8, 8, false);
  for (int t = 0; t < 64; ++t)
    for (int c = 0; c < 4; ++c) reprs.at(t, c) += static_cast<float>(c + 1);
  const auto b = relative_log_amplitude(reprs, 8, 8, false);
  ASSERT_EQ(a.bins.size(), b.bins.size());
  EXPECT_EQ(a.bins.size(), 11u);
  EXPECT_NE(a.bins[0].mean_log_amplitude, b.bins[0].mean_log_amplitude);
  for (std::size_t i = 1; i < a.bins.size(); ++i) {
    EXPECT_NEAR(a.bins[i].mean_log_amplitude, b.bins[i].mean_log_amplitude, 1e-5);
  }
}

TEST(RelativeLogAmplitude, GridMismatch) {
  EXPECT_ERROR(relative_log_amplitude(Tensor(Shape{15, 2}), 4, 4, false), kShapeError);
}

TEST(BandNoise, AllPassIsRescaledWhiteField) {
  const auto n = band_noise(16, 16, {0.0, 1.0}, 0.3, 5);
  double sq = 0;
  for (float v : n.data()) sq += static_cast<double>(v) * v;
  EXPECT_NEAR(std::sqrt(sq / 256), 0.3, 1e-6);
}

TEST(BandNoise, DeterministicAndSeedDependent) {
  const FrequencyBand band{0.3, 0.4};
  EXPECT_TRUE(bit_equal(band_noise(12, 10, band, 1.0, 42), band_noise(12, 10, band, 1.0, 42)));
  EXPECT_FALSE(bit_equal(band_noise(12, 10, band, 1.0, 42), band_noise(12, 10, band, 1.0, 43)));
}

TEST(BandNoise, EnergyStaysInBand) {
  for (const auto& band : {FrequencyBand{0.9, 1.0}, FrequencyBand{0.0, 0.1}, FrequencyBand{0.45, 0.55}}) {
    const auto n = band_noise(32, 32, band, 1.0, 11);
    const auto ref = oracle::naive_dft(to_vector(n), 32, 32);
    long double inside = 0, total = 0;
    for (int u = 0; u < 32; ++u) {
      for (int v = 0; v < 32; ++v) {
        const long double e = std::norm(ref[u * 32 + v]);
        total += e;
        if (in_band(u, v, 32, 32, band)) inside += e;
      }
    }
    EXPECT_GE(inside / total, 0.99L);
  }
}

TEST(BandNoise, ZeroMeanWithoutDc) {
  const auto n = band_noise(16, 16, {0.2, 0.6}, 2.0, 3);
  double mean = 0;
  for (float v : n.data()) mean += v;
  EXPECT_LE(std::abs(mean / 256), 1e-6 * 2.0);
}

TEST(BandNoise, Errors) {
  EXPECT_ERROR(band_noise(2, 2, {0.1, 0.2}, 1.0, 1), kEmptyBand);
  EXPECT_ERROR(band_noise(8, 8, {0.4, 0.2}, 1.0, 1), kInvalidBand);
  EXPECT_ERROR(band_noise(8, 8, {0.0, 1.0}, 0.0, 1), kInvalidArgument);
}

TEST(AmplitudeAccumulator, AveragesAcrossMaps) {
  oracle::Gen gen(61);
  const auto a = oracle::random_tensor(gen, {16, 2});
  const auto b = oracle::random_tensor(gen, {16, 2});
  AmplitudeAccumulator acc;
  acc.add(a, 4, 4, false);
  acc.add(b, 4, 4, false);
  const auto ra = relative_log_amplitude(a, 4, 4, false);
  const auto rb = relative_log_amplitude(b, 4, 4, false);
  const auto both = acc.result(3);
  EXPECT_EQ(both.layer, 3);
  for (std::size_t i = 0; i < both.bins.size(); ++i) {
    EXPECT_NEAR(both.bins[i].mean_log_amplitude, 0.5 * (ra.bins[i].mean_log_amplitude + rb.bins[i].mean_log_amplitude),
                1e-12);
  }
  EXPECT_DOUBLE_EQ(both.delta_log_amplitude, both.bins.back().mean_log_amplitude - both.bins.front().mean_log_amplitude);
}
