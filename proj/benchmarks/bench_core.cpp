#include <benchmark/benchmark.h>

#include "vitlens/attention_metrics.hpp"
#include "vitlens/forward.hpp"
#include "vitlens/linalg.hpp"
#include "vitlens/rng.hpp"
#include "vitlens/spectral.hpp"

using namespace vitlens;

namespace {

Tensor random_tensor(Shape shape, std::uint64_t seed) {
  Tensor t(std::move(shape));
  Rng rng(seed);
  for (float& v : t.data()) v = static_cast<float>(rng.normal());
  return t;
}

Tensor random_attention(int heads, int n, std::uint64_t seed) {
  Tensor t(Shape{heads, n, n});
  Rng rng(seed);
  for (int h = 0; h < heads; ++h)
    for (int q = 0; q < n; ++q) {
      double sum = 0;
      for (int k = 0; k < n; ++k) sum += t.at(h, q, k) = static_cast<float>(rng.uniform() + 1e-3);
      for (int k = 0; k < n; ++k) t.at(h, q, k) = static_cast<float>(t.at(h, q, k) / sum);
    }
  return t;
}

void BM_Svd(benchmark::State& state) {
  const auto n = state.range(0);
  const auto a = random_tensor(Shape{n * 2, n}, 1);
  for (auto _ : state) benchmark::DoNotOptimize(svd(a));
}
BENCHMARK(BM_Svd)->Arg(16)->Arg(64)->Arg(192);

void BM_Dft2(benchmark::State& state) {
  const auto n = state.range(0);
  const auto grid = random_tensor(Shape{n, n}, 2);
  for (auto _ : state) benchmark::DoNotOptimize(dft2(grid));
}
BENCHMARK(BM_Dft2)->Arg(8)->Arg(14)->Arg(32);

void BM_AttentionNmi(benchmark::State& state) {
  const auto attn = random_attention(12, static_cast<int>(state.range(0)), 3);
  for (auto _ : state) benchmark::DoNotOptimize(attention_nmi(attn));
}
BENCHMARK(BM_AttentionNmi)->Arg(64)->Arg(197);

void BM_AttentionDistance(benchmark::State& state) {
  const auto attn = random_attention(12, 196, 4);
  for (auto _ : state) benchmark::DoNotOptimize(attention_distance(attn, 14, 14, 16.0, false));
}
BENCHMARK(BM_AttentionDistance);

void BM_Forward(benchmark::State& state) {
  ModelConfig c;
  c.depth = 4;
  c.heads = 4;
  c.dim = static_cast<int>(state.range(0));
  c.image_size = 32;
  c.patch_size = 4;
  const auto w = random_weights(c, 5);
  Tensor img(Shape{3, 32, 32}, 0.5f);
  for (auto _ : state) benchmark::DoNotOptimize(forward(img, w, c));
}
BENCHMARK(BM_Forward)->Arg(32)->Arg(64);

}  // namespace
BENCHMARK_MAIN();
