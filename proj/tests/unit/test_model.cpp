#include <gtest/gtest.h>

#include <cmath>

#include "test_helpers.hpp"
#include "vitlens/model.hpp"
#include "vitlens/nadf.hpp"
#include "vitlens/rng.hpp"

using namespace vitlens;

namespace {

ModelConfig toy(bool cls = false) {
  ModelConfig c;
  c.depth = 2;
  c.heads = 2;
  c.dim = 8;
  c.patch_size = 4;
  c.image_size = 8;
  c.use_cls = cls;
  return c;
}

}  // namespace

TEST(ModelConfig, DerivedSizes) {
  const auto c = toy(true);
  EXPECT_EQ(c.grid(), 2);
  EXPECT_EQ(c.tokens(), 5);
  EXPECT_EQ(c.head_dim(), 4);
  EXPECT_EQ(c.mlp_hidden(), 32);
  EXPECT_EQ(c.patch_features(), 48);
}

TEST(ModelConfig, Validation) {
  auto c = toy();
  EXPECT_NO_THROW(c.validate());
  c.dim = 7;
  EXPECT_ERROR(c.validate(), kInvalidArgument);
  c = toy();
  c.image_size = 10;
  EXPECT_ERROR(c.validate(), kInvalidArgument);
  c = toy();
  c.depth = 0;
  EXPECT_ERROR(c.validate(), kInvalidArgument);
  c = toy();
  c.mlp_ratio = 0.0;
  EXPECT_ERROR(c.validate(), kInvalidArgument);
}

TEST(ModelConfig, JsonRoundTrip) {
  const auto c = toy(true);
  const nlohmann::json j = c;
  EXPECT_EQ(j.get<ModelConfig>(), c);
}

TEST(RandomWeights, Deterministic) {
  const auto c = toy(true);
  const auto a = random_weights(c, 3);
  const auto b = random_weights(c, 3);
  const auto other = random_weights(c, 4);
  EXPECT_TRUE(bit_equal(a.patch_weight, b.patch_weight));
  EXPECT_TRUE(bit_equal(a.layers[1].w2, b.layers[1].w2));
  EXPECT_TRUE(bit_equal(a.cls_token, b.cls_token));
  EXPECT_FALSE(bit_equal(a.patch_weight, other.patch_weight));
  EXPECT_NO_THROW(a.validate(c));
}

TEST(RandomWeights, LayerNormInitAndSpread) {
  ModelConfig c = toy();
  c.dim = 64;
  c.heads = 4;
  const auto w = random_weights(c, 1);
  for (std::size_t i = 0; i < w.layers[0].ln1_scale.size(); ++i) {
    EXPECT_EQ(w.layers[0].ln1_scale[i], 1.0f);
    EXPECT_EQ(w.layers[0].ln2_shift[i], 0.0f);
  }
  double sq = 0.0, mean = 0.0;
  for (float v : w.patch_weight.data()) {
    mean += v;
    sq += static_cast<double>(v) * v;
    EXPECT_LE(std::abs(v), 0.04f + 1e-7f);
  }
  const double n = static_cast<double>(w.patch_weight.size());
  const double std = std::sqrt(sq / n - (mean / n) * (mean / n));
  EXPECT_GE(std, 0.015);
  EXPECT_LE(std, 0.025);
  // 3072 samples: the sample std sits within a few percent of the sampler's analytic value.
  EXPECT_NEAR(std, truncated_normal_std(0.02), 0.0015);
}

TEST(RandomWeights, ValidateCatchesShapeErrors) {
  const auto c = toy();
  auto w = random_weights(c, 1);
  w.layers[0].wq = Tensor(Shape{8, 7});
  EXPECT_ERROR(w.validate(c), kShapeError);
  w = random_weights(c, 1);
  w.layers.pop_back();
  EXPECT_ERROR(w.validate(c), kShapeError);
}

TEST(LocalMask, UnlimitedIsAllOnes) {
  const auto m = make_local_mask(3, 3, AttentionRestriction::unlimited());
  for (float v : m.data()) EXPECT_EQ(v, 1.0f);
}

TEST(LocalMask, CenterOfThreeByThree) {
  const auto m = make_local_mask(3, 3, AttentionRestriction::local(3));
  float admitted = 0;
  for (int k = 0; k < 9; ++k) admitted += m.at(4, k);
  EXPECT_EQ(admitted, 9.0f);
  float corner = 0;
  for (int k = 0; k < 9; ++k) corner += m.at(0, k);
  EXPECT_EQ(corner, 4.0f);
}

TEST(LocalMask, PairCountOnFourByFour) {
  // Exhaustive enumeration: each cell admits its clipped 3x3 neighbourhood;
  // 4 corners * 4 + 8 edges * 6 + 4 interior * 9 = 100.
  const auto m = make_local_mask(4, 4, AttentionRestriction::local(3));
  double total = 0;
  for (float v : m.data()) total += v;
  EXPECT_EQ(total, 100.0);
}

TEST(LocalMask, ChebyshevRule) {
  const int g = 6;
  for (int k : {1, 3, 5, 7}) {
    const auto m = make_local_mask(g, g, AttentionRestriction::local(k));
    for (int q = 0; q < g * g; ++q) {
      for (int p = 0; p < g * g; ++p) {
        const int cheb = std::max(std::abs(q / g - p / g), std::abs(q % g - p % g));
        EXPECT_EQ(m.at(q, p), cheb <= (k - 1) / 2 ? 1.0f : 0.0f);
      }
    }
  }
}

TEST(LocalMask, ClsHandling) {
  const auto global = make_local_mask(2, 2, AttentionRestriction::local(1, true), true);
  for (int i = 0; i < 5; ++i) {
    EXPECT_EQ(global.at(0, i), 1.0f);
    EXPECT_EQ(global.at(i, 0), 1.0f);
  }
  const auto isolated = make_local_mask(2, 2, AttentionRestriction::local(1, false), true);
  EXPECT_EQ(isolated.at(0, 0), 1.0f);
  for (int i = 1; i < 5; ++i) {
    EXPECT_EQ(isolated.at(0, i), 0.0f);
    EXPECT_EQ(isolated.at(i, 0), 0.0f);
    EXPECT_EQ(isolated.at(i, i), 1.0f);
  }
}

TEST(LocalMask, EvenKernelRejected) {
  EXPECT_ERROR(make_local_mask(4, 4, AttentionRestriction::local(2)), kInvalidKernel);
  EXPECT_ERROR(make_local_mask(4, 4, AttentionRestriction::local(0)), kInvalidKernel);
  EXPECT_ERROR(make_local_mask(4, 4, AttentionRestriction::local(-3)), kInvalidKernel);
}

TEST(Weights, SaveLoadRoundTrip) {
  const auto c = toy(true);
  auto w = random_weights(c, 12);
  w.head = ClassifierHead{Tensor(Shape{8, 3}, 0.5f), Tensor(Shape{3}, -1.0f)};
  const auto path = std::filesystem::temp_directory_path() / "vitlens_weights_test.nad";
  save_weights(w, c, path);
  const auto [c2, w2] = load_weights(path);
  EXPECT_EQ(c2, c);
  EXPECT_TRUE(bit_equal(w2.pos_embed, w.pos_embed));
  EXPECT_TRUE(bit_equal(w2.layers[1].bo, w.layers[1].bo));
  ASSERT_TRUE(w2.head.has_value());
  EXPECT_TRUE(bit_equal(w2.head->weight, w.head->weight));
  const auto header = nadf::peek_header(path);
  EXPECT_EQ(header["kind"], "weights");
  EXPECT_TRUE(header["tensors"].contains("weights/blocks/1/attn/wq"));
  std::filesystem::remove(path);
}
