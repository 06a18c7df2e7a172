#include "vitlens/attention_metrics.hpp"

#include <cmath>

#include "vitlens/error.hpp"

namespace vitlens {

namespace {

constexpr double kJointFloor = 1e-12;

void check_square(const Tensor& attn) {
  require(attn.rank() == 3 && attn.dim(1) == attn.dim(2), ErrorCode::kShapeError,
          "attention must be [H, N, N], got " + shape_to_string(attn.shape()));
}

// Row-stochastic [N', N'] slice of head `h` with the first `skip` tokens removed.
std::vector<double> head_matrix(const Tensor& attn, std::int64_t h, int skip, bool renormalize) {
  const auto n = attn.dim(1);
  const auto m = n - skip;
  std::vector<double> a(static_cast<std::size_t>(m * m));
  for (std::int64_t q = 0; q < m; ++q) {
    double sum = 0.0;
    for (std::int64_t k = 0; k < m; ++k) {
      const double p = attn.at(h, q + skip, k + skip);
      a[static_cast<std::size_t>(q * m + k)] = p;
      sum += p;
    }
    if (renormalize && sum > 0.0) {
      for (std::int64_t k = 0; k < m; ++k) a[static_cast<std::size_t>(q * m + k)] /= sum;
    }
  }
  return a;
}

}  // namespace

std::vector<double> attention_distance(const Tensor& attn, int grid_h, int grid_w, double patch_px,
                                       bool exclude_cls) {
  check_square(attn);
  require(grid_h >= 1 && grid_w >= 1, ErrorCode::kShapeError, "grid must be at least 1x1");
  const std::int64_t spatial = static_cast<std::int64_t>(grid_h) * grid_w;
  const std::int64_t n = attn.dim(1);
  require(n == spatial || n == spatial + 1, ErrorCode::kShapeError,
          "attention has " + std::to_string(n) + " tokens but the grid is " + std::to_string(grid_h) +
              "x" + std::to_string(grid_w));
  const int skip = n == spatial + 1 ? 1 : 0;

  // Pairwise distances between grid cells, in pixels.
  std::vector<double> dist(static_cast<std::size_t>(spatial * spatial));
  for (std::int64_t q = 0; q < spatial; ++q) {
    for (std::int64_t k = 0; k < spatial; ++k) {
      const double dy = static_cast<double>(q / grid_w - k / grid_w);
      const double dx = static_cast<double>(q % grid_w - k % grid_w);
      dist[static_cast<std::size_t>(q * spatial + k)] = patch_px * std::sqrt(dx * dx + dy * dy);
    }
  }

  std::vector<double> result(static_cast<std::size_t>(attn.dim(0)));
  for (std::int64_t h = 0; h < attn.dim(0); ++h) {
    const auto a = head_matrix(attn, h, skip, exclude_cls && skip == 1);
    double total = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) total += a[i] * dist[i];
    result[static_cast<std::size_t>(h)] = total / static_cast<double>(spatial);
  }
  return result;
}

std::vector<NmiResult> attention_nmi(const Tensor& attn, bool drop_first_token) {
  check_square(attn);
  const int skip = drop_first_token ? 1 : 0;
  const std::int64_t n = attn.dim(1) - skip;
  require(n >= 2, ErrorCode::kShapeError, "NMI needs at least two tokens");

  std::vector<NmiResult> result;
  result.reserve(static_cast<std::size_t>(attn.dim(0)));
  for (std::int64_t h = 0; h < attn.dim(0); ++h) {
    const std::int64_t full = attn.dim(1);
    for (std::int64_t q = 0; q < full; ++q) {
      double sum = 0.0;
      for (std::int64_t k = 0; k < full; ++k) {
        const float p = attn.at(h, q, k);
        require(std::isfinite(p) && p >= 0.0f && p <= 1.0f, ErrorCode::kInvalidAttention,
                "attention entries must lie in [0, 1]");
        sum += p;
      }
      require(std::abs(sum - 1.0) <= kRowSumTolerance, ErrorCode::kInvalidAttention,
              "attention row " + std::to_string(q) + " of head " + std::to_string(h) +
                  " sums to " + std::to_string(sum));
    }
    const auto a = head_matrix(attn, h, skip, drop_first_token);
    const double nd = static_cast<double>(n);

    // Key marginal p(k) = sum_q A[q,k] / N.
    std::vector<double> pk(static_cast<std::size_t>(n), 0.0);
    for (std::int64_t q = 0; q < n; ++q) {
      for (std::int64_t k = 0; k < n; ++k) pk[static_cast<std::size_t>(k)] += a[static_cast<std::size_t>(q * n + k)];
    }
    double hk = 0.0;
    for (auto& p : pk) {
      p /= nd;
      if (p > kJointFloor) hk -= p * std::log(p);
    }
    if (hk <= kJointFloor) {
      result.push_back({0.0, true});
      continue;
    }
    // I = sum p(q,k) ln(p(q,k) / (p(q) p(k))) = sum (A/N) ln(A / p(k)).
    double mi = 0.0;
    for (std::int64_t q = 0; q < n; ++q) {
      for (std::int64_t k = 0; k < n; ++k) {
        const double aqk = a[static_cast<std::size_t>(q * n + k)];
        if (aqk / nd <= kJointFloor) continue;
        mi += aqk / nd * std::log(aqk / pk[static_cast<std::size_t>(k)]);
      }
    }
    const double hq = std::log(nd);
    result.push_back({std::max(0.0, mi / std::sqrt(hq * hk)), false});
  }
  return result;
}

HeadStats nmi_head_stats(const std::vector<std::vector<double>>& nmi) {
  HeadStats stats;
  for (const auto& heads : nmi) {
    require(!heads.empty(), ErrorCode::kInvalidArgument, "need at least one head per layer");
    double mean = 0.0;
    for (double v : heads) mean += v;
    mean /= static_cast<double>(heads.size());
    double var = 0.0;
    for (double v : heads) var += (v - mean) * (v - mean);
    var /= static_cast<double>(heads.size());
    stats.mean.push_back(mean);
    stats.std.push_back(std::sqrt(var));
  }
  return stats;
}

AttentionStats attention_stats(const ActivationBundle& bundle, const AttentionStatsOptions& options) {
  const double patch_px = options.patch_px > 0.0 ? options.patch_px : bundle.config.patch_size;
  AttentionStats stats;
  for (const auto& attn : bundle.attention) {
    stats.distance.push_back(attention_distance(attn, bundle.grid_h(), bundle.grid_w(), patch_px, true));
    const auto nmi = attention_nmi(attn, options.nmi_exclude_cls && bundle.config.use_cls);
    std::vector<double> values;
    std::vector<bool> degenerate;
    for (const auto& r : nmi) {
      values.push_back(r.value);
      degenerate.push_back(r.degenerate);
    }
    stats.nmi.push_back(std::move(values));
    stats.nmi_degenerate.push_back(std::move(degenerate));
  }
  auto summary = nmi_head_stats(stats.nmi);
  stats.nmi_mean = std::move(summary.mean);
  stats.nmi_std = std::move(summary.std);
  return stats;
}

void AttentionStatsAccumulator::add(const AttentionStats& stats) {
  if (count_ == 0) {
    distance_sum_ = stats.distance;
    nmi_sum_ = stats.nmi;
  } else {
    require(stats.distance.size() == distance_sum_.size(), ErrorCode::kMixedBundles,
            "attention statistics have differing depth");
    for (std::size_t l = 0; l < distance_sum_.size(); ++l) {
      require(stats.distance[l].size() == distance_sum_[l].size(), ErrorCode::kMixedBundles,
              "attention statistics have differing head counts");
      for (std::size_t h = 0; h < distance_sum_[l].size(); ++h) {
        distance_sum_[l][h] += stats.distance[l][h];
        nmi_sum_[l][h] += stats.nmi[l][h];
      }
    }
  }
  ++count_;
}

AttentionStats AttentionStatsAccumulator::mean() const {
  require(count_ > 0, ErrorCode::kEmptyRun, "no attention statistics accumulated");
  AttentionStats out;
  out.distance = distance_sum_;
  out.nmi = nmi_sum_;
  const double inv = 1.0 / static_cast<double>(count_);
  for (std::size_t l = 0; l < out.distance.size(); ++l) {
    for (std::size_t h = 0; h < out.distance[l].size(); ++h) {
      out.distance[l][h] *= inv;
      out.nmi[l][h] *= inv;
    }
    out.nmi_degenerate.emplace_back(out.nmi[l].size(), false);
  }
  auto summary = nmi_head_stats(out.nmi);
  out.nmi_mean = std::move(summary.mean);
  out.nmi_std = std::move(summary.std);
  return out;
}

}  // namespace vitlens
