#pragma once

#include <cstdint>
#include <vector>

#include "vitlens/tensor.hpp"

namespace vitlens {

enum class ReconstructionNorm { kL1, kL2 };

struct HybridConfig {
  double lambda = 0.2;       // weight of the contrastive term
  double temperature = 0.2;
  double mask_ratio = 0.6;
  ReconstructionNorm norm = ReconstructionNorm::kL1;

  void validate() const;
};

/// InfoNCE over l2-normalized embeddings: logits = [q.p, q.n_1, ..., q.n_K] / tau,
/// loss = -log softmax(logits)[0], via max-subtracted log-sum-exp.
/// query, positive: [D]; negatives: [K, D].
double infonce(const Tensor& query, const Tensor& positive, const Tensor& negatives, double temperature);

/// Mean over masked rows and all channels of |pred - target| (L1) or
/// (pred - target)^2 (L2). predicted, target: [N, Dp]; mask: N flags.
double mim_loss(const Tensor& predicted, const Tensor& target, const std::vector<bool>& mask,
                ReconstructionNorm norm);

/// Exactly round(ratio * N) positions set, chosen uniformly without
/// replacement; deterministic in `seed`.
std::vector<bool> random_mask(int grid_h, int grid_w, double ratio, std::uint64_t seed);

/// (1 - lambda) * l_mim + lambda * l_cl.
double hybrid_loss(double l_mim, double l_cl, double lambda);

}  // namespace vitlens
