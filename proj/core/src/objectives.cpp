#include "vitlens/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "vitlens/error.hpp"
#include "vitlens/rng.hpp"

namespace vitlens {

void HybridConfig::validate() const {
  require(lambda >= 0.0 && lambda <= 1.0, ErrorCode::kInvalidLambda, "lambda must lie in [0, 1]");
  require(temperature > 0.0, ErrorCode::kInvalidArgument, "temperature must be positive");
  require(mask_ratio > 0.0 && mask_ratio < 1.0, ErrorCode::kInvalidArgument, "mask ratio must lie in (0, 1)");
}

namespace {

std::vector<double> normalized(std::span<const float> v, const char* what) {
  double norm = 0.0;
  for (float x : v) {
    require(std::isfinite(x), ErrorCode::kNumericalError, std::string(what) + " is not finite");
    norm += static_cast<double>(x) * x;
  }
  norm = std::sqrt(norm);
  require(norm > 0.0, ErrorCode::kDegenerateEmbedding, std::string(what) + " has zero norm");
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / norm;
  return out;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

}  // namespace

double infonce(const Tensor& query, const Tensor& positive, const Tensor& negatives, double temperature) {
  require(temperature > 0.0, ErrorCode::kInvalidArgument, "temperature must be positive");
  require(query.rank() == 1 && positive.shape() == query.shape(), ErrorCode::kShapeError,
          "query and positive must be matching [D] vectors");
  require(negatives.rank() == 2 && negatives.dim(1) == query.dim(0), ErrorCode::kShapeError,
          "negatives must be [K, D]");
  const auto q = normalized(query.data(), "query");
  const auto p = normalized(positive.data(), "positive");

  std::vector<double> logits{dot(q, p) / temperature};
  for (std::int64_t k = 0; k < negatives.dim(0); ++k) {
    logits.push_back(dot(q, normalized(negatives.row(k), "negative")) / temperature);
  }
  const double max_logit = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (double l : logits) total += std::exp(l - max_logit);
  return max_logit + std::log(total) - logits.front();
}

double mim_loss(const Tensor& predicted, const Tensor& target, const std::vector<bool>& mask,
                ReconstructionNorm norm) {
  require(predicted.rank() == 2 && predicted.shape() == target.shape(), ErrorCode::kShapeError,
          "prediction and target must be matching [N, Dp] tensors");
  require(static_cast<std::int64_t>(mask.size()) == predicted.dim(0), ErrorCode::kShapeError,
          "mask length must equal the token count");
  const auto channels = static_cast<std::size_t>(predicted.dim(1));
  double total = 0.0;
  std::size_t masked = 0;
  for (std::size_t t = 0; t < mask.size(); ++t) {
    if (!mask[t]) continue;
    ++masked;
    const auto pr = predicted.row(static_cast<std::int64_t>(t));
    const auto tg = target.row(static_cast<std::int64_t>(t));
    for (std::size_t c = 0; c < channels; ++c) {
      const double diff = static_cast<double>(pr[c]) - tg[c];
      total += norm == ReconstructionNorm::kL1 ? std::abs(diff) : diff * diff;
    }
  }
  require(masked > 0, ErrorCode::kEmptyMask, "mask selects no positions");
  return total / static_cast<double>(masked * channels);
}

std::vector<bool> random_mask(int grid_h, int grid_w, double ratio, std::uint64_t seed) {
  require(grid_h >= 1 && grid_w >= 1, ErrorCode::kShapeError, "grid must be at least 1x1");
  require(ratio > 0.0 && ratio < 1.0, ErrorCode::kDegenerateRatio, "mask ratio must lie in (0, 1)");
  const int n = grid_h * grid_w;
  const auto count = static_cast<int>(std::lround(ratio * n));
  require(count > 0 && count < n, ErrorCode::kDegenerateRatio,
          "ratio " + std::to_string(ratio) + " masks " + std::to_string(count) + " of " + std::to_string(n) +
              " positions");
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  // Partial Fisher-Yates: the first `count` slots are a uniform sample.
  for (int i = 0; i < count; ++i) {
    const auto j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - i)));
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
  }
  std::vector<bool> mask(static_cast<std::size_t>(n), false);
  for (int i = 0; i < count; ++i) mask[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = true;
  return mask;
}

double hybrid_loss(double l_mim, double l_cl, double lambda) {
  require(lambda >= 0.0 && lambda <= 1.0, ErrorCode::kInvalidLambda,
          "lambda must lie in [0, 1], got " + std::to_string(lambda));
  require(std::isfinite(l_mim) && std::isfinite(l_cl), ErrorCode::kNumericalError, "losses must be finite");
  return (1.0 - lambda) * l_mim + lambda * l_cl;
}

}  // namespace vitlens
