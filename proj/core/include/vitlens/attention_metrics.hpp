#pragma once

#include <vector>

#include "vitlens/bundle.hpp"
#include "vitlens/tensor.hpp"

namespace vitlens {

/// Attention-weighted mean query-key distance per head, in units of
/// `patch_px` (pixels per grid step; pass 1 for patch units).
///
/// `attn` is [H, N, N] with N = grid_h*grid_w, or grid_h*grid_w + 1 when a CLS
/// token sits at index 0. With exclude_cls the CLS row and column are dropped
/// and each remaining row is re-normalized. Without it, CLS queries are
/// skipped and attention mass on the CLS key contributes zero distance.
std::vector<double> attention_distance(const Tensor& attn, int grid_h, int grid_w, double patch_px,
                                       bool exclude_cls);

struct NmiResult {
  double value = 0.0;
  bool degenerate = false;  // H(k) == 0: every query attends to a single key
};

/// Normalized mutual information I(q,k) / sqrt(H(q) H(k)) per head, with
/// p(q) = 1/N, p(q,k) = A[q,k]/N, natural logarithms, 0 ln 0 := 0.
/// drop_first_token removes token 0 (CLS) and re-normalizes rows first.
std::vector<NmiResult> attention_nmi(const Tensor& attn, bool drop_first_token = false);

struct HeadStats {
  std::vector<double> mean;  // per layer
  std::vector<double> std;   // population std over heads
};

HeadStats nmi_head_stats(const std::vector<std::vector<double>>& nmi);

struct AttentionStats {
  std::vector<std::vector<double>> distance;  // [L][H]
  std::vector<std::vector<double>> nmi;       // [L][H]
  std::vector<double> nmi_mean;               // [L]
  std::vector<double> nmi_std;                // [L]
  std::vector<std::vector<bool>> nmi_degenerate;
};

struct AttentionStatsOptions {
  double patch_px = -1.0;        // <= 0: use the bundle's patch size
  bool nmi_exclude_cls = false;  // align NMI with the distance convention
};

AttentionStats attention_stats(const ActivationBundle& bundle, const AttentionStatsOptions& options = {});

/// Equal-weight streaming mean of per-image attention statistics.
class AttentionStatsAccumulator {
 public:
  void add(const AttentionStats& stats);
  std::size_t count() const noexcept { return count_; }
  /// Per-layer/head means; nmi_mean/nmi_std are recomputed over the averaged heads.
  AttentionStats mean() const;

 private:
  std::size_t count_ = 0;
  std::vector<std::vector<double>> distance_sum_;
  std::vector<std::vector<double>> nmi_sum_;
};

}  // namespace vitlens
