#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "vitlens/dataset.hpp"
#include "vitlens/forward.hpp"
#include "vitlens/model.hpp"
#include "vitlens/probe.hpp"
#include "vitlens/spectral.hpp"

namespace vitlens {

struct RobustnessOptions {
  double rms = 0.1;
  std::uint64_t seed = 0;
  Pooling pooling = Pooling::kMeanTokens;
  /// Clamp noisy pixels to [0, 1].
  bool clamp = false;
  AttentionRestriction restriction;
};

struct BandRobustness {
  FrequencyBand band;
  double clean_accuracy = 0.0;
  double noisy_accuracy = 0.0;
  double drop = 0.0;  // clean - noisy, in [-1, 1]
};

/// Predicted class of one image: final representations, pooled, through `head`.
int classify(const Tensor& image, const Weights& weights, const ModelConfig& config, const ClassifierHead& head,
             Pooling pooling, const AttentionRestriction& restriction = {});

/// Clean accuracy first, then for each band the accuracy after adding
/// band_noise independently to every channel of every image. Each
/// (band, image, channel) draws from its own subseed of options.seed.
/// Uses `head` when given, otherwise weights.head (NoClassifier if neither).
std::vector<BandRobustness> robustness_curve(const Weights& weights, const ModelConfig& config,
                                             const std::optional<ClassifierHead>& head,
                                             const LabeledImages& dataset, const std::vector<FrequencyBand>& bands,
                                             const RobustnessOptions& options);

/// The noisy copy of `image` used for (band_index, image_index).
Tensor add_band_noise(const Tensor& image, const FrequencyBand& band, double rms, std::uint64_t seed,
                      std::size_t band_index, std::size_t image_index, bool clamp);

}  // namespace vitlens
