#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "vitlens/tensor.hpp"

namespace vitlens {

/// Hyperparameters of the pre-LN ViT runtime.
struct ModelConfig {
  int depth = 1;
  int heads = 1;
  int dim = 8;
  int patch_size = 4;
  int image_size = 8;
  int channels = 3;
  double mlp_ratio = 4.0;
  bool use_cls = false;

  /// Throws InvalidArgument when any invariant is violated.
  void validate() const;

  int grid() const noexcept { return image_size / patch_size; }
  int spatial_tokens() const noexcept { return grid() * grid(); }
  int tokens() const noexcept { return spatial_tokens() + (use_cls ? 1 : 0); }
  int head_dim() const noexcept { return dim / heads; }
  int mlp_hidden() const;
  int patch_features() const noexcept { return patch_size * patch_size * channels; }

  bool operator==(const ModelConfig&) const = default;
};

void to_json(nlohmann::json& j, const ModelConfig& config);
void from_json(const nlohmann::json& j, ModelConfig& config);

struct LayerWeights {
  Tensor ln1_scale, ln1_shift;  // [D]
  Tensor wq, bq;                // [D,D], [D]
  Tensor wk, bk;
  Tensor wv, bv;
  Tensor wo, bo;
  Tensor ln2_scale, ln2_shift;  // [D]
  Tensor w1, b1;                // [D,hidden], [hidden]
  Tensor w2, b2;                // [hidden,D], [D]
};

/// Linear classifier applied to a pooled [D] representation.
struct ClassifierHead {
  Tensor weight;  // [D, num_classes]
  Tensor bias;    // [num_classes]

  int num_classes() const { return static_cast<int>(weight.dim(1)); }
};

struct Weights {
  Tensor patch_weight;  // [P*P*C, D], row index c*P*P + py*P + px
  Tensor patch_bias;    // [D]
  Tensor cls_token;     // [D], present iff config.use_cls
  Tensor pos_embed;     // [N, D]
  std::vector<LayerWeights> layers;
  std::optional<ClassifierHead> head;

  /// Throws ShapeError when a tensor is inconsistent with `config`.
  void validate(const ModelConfig& config) const;
};

/// Deterministic in (config, seed): matrices, biases and embeddings are
/// truncated-normal(0, init_std) cut at two standard deviations; layernorm
/// scales are 1 and shifts 0.
Weights random_weights(const ModelConfig& config, std::uint64_t seed, double init_std = 0.02);

/// Local attention window. `kernel` empty means unrestricted.
struct AttentionRestriction {
  std::optional<int> kernel;
  bool include_cls_always = true;

  static AttentionRestriction unlimited() { return {}; }
  static AttentionRestriction local(int kernel, bool include_cls_always = true) {
    return {kernel, include_cls_always};
  }
  bool restricted() const noexcept { return kernel.has_value(); }
};

/// Admissibility mask [N,N] with N = grid_h*grid_w (+1 when has_cls, CLS at
/// index 0). mask[q,k] = 1 iff the Chebyshev distance between the grid cells
/// of q and k is <= (kernel-1)/2. With include_cls_always the CLS row and
/// column are all ones; otherwise CLS only attends to, and is only attended
/// by, itself. Even or non-positive kernels throw InvalidKernel.
Tensor make_local_mask(int grid_h, int grid_w, const AttentionRestriction& restriction,
                       bool has_cls = false);

void save_weights(const Weights& weights, const ModelConfig& config,
                  const std::filesystem::path& path);
std::pair<ModelConfig, Weights> load_weights(const std::filesystem::path& path);

}  // namespace vitlens
