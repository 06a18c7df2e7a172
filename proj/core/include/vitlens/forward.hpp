#pragma once

#include <optional>

#include "vitlens/bundle.hpp"
#include "vitlens/model.hpp"
#include "vitlens/tensor.hpp"

namespace vitlens {

enum class HeadOutputCapture {
  kNone,
  kPreProjection,   // per-head attention outputs [H, N, D/H] before the output projection
  kPostProjection,  // each head's slice pushed through its rows of W_o: [H, N, D]
};

struct ForwardOptions {
  AttentionRestriction restriction;
  /// Layers with index >= this value use uniform attention over admitted
  /// keys instead of softmax(QK^T). Used as an attention-collapse surrogate.
  std::optional<int> uniform_attention_from;
  HeadOutputCapture head_outputs = HeadOutputCapture::kPreProjection;
  bool capture_post_attention = true;
  bool keep_input = true;
};

inline constexpr float kLayerNormEps = 1e-6f;
inline constexpr double kMaskedLogit = -1e9;

/// Pre-LN ViT forward pass over one image [C, S, S]:
///   x <- x + Attn(LN(x));  x <- x + MLP(LN(x))
/// with exact-erf GELU and max-subtracted softmax. Masked logits receive
/// kMaskedLogit, so their probabilities underflow to exactly zero.
ActivationBundle forward(const Tensor& image, const Weights& weights, const ModelConfig& config,
                         const ForwardOptions& options);

ActivationBundle forward(const Tensor& image, const Weights& weights, const ModelConfig& config,
                         const std::optional<AttentionRestriction>& restriction = std::nullopt);

/// Flattens the image into [spatial_tokens, P*P*C] patch vectors.
Tensor patchify(const Tensor& image, const ModelConfig& config);

}  // namespace vitlens
