#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "vitlens/bundle.hpp"
#include "vitlens/linalg.hpp"
#include "vitlens/model.hpp"
#include "vitlens/tensor.hpp"

namespace vitlens {

enum class Pooling { kMeanTokens, kCls };

/// Mean over spatial tokens (token 0 skipped when use_cls) or the CLS token.
Tensor pool(const Tensor& reprs, Pooling pooling, bool use_cls);

struct ProbeConfig {
  double learning_rate = 0.1;
  int epochs = 100;
  int batch_size = 32;
  double weight_decay = 0.0;
  Pooling pooling = Pooling::kMeanTokens;
  std::uint64_t seed = 0;
  bool fit_bias = true;

  void validate() const;
};

/// Multinomial logistic regression: logits = x W + b.
struct ProbeModel {
  int dim = 0;
  int num_classes = 0;
  std::vector<double> weights;  // [dim, num_classes]
  std::vector<double> bias;     // [num_classes]
  std::vector<double> training_log;

  std::vector<double> logits(std::span<const double> x) const;
  /// Argmax with ties broken toward the lowest class index.
  int predict(std::span<const double> x) const;
  ClassifierHead to_head() const;
};

/// Mean cross-entropy over all rows plus (weight_decay / 2) * ||W||^2.
/// Fills analytic gradients when the output pointers are non-null.
double probe_loss(const ProbeModel& model, const DMatrix& features, std::span<const int> labels,
                  double weight_decay = 0.0, std::vector<double>* grad_weights = nullptr,
                  std::vector<double>* grad_bias = nullptr);

/// Mini-batch gradient descent from zero initialization. Batches follow a
/// seeded per-epoch permutation. num_classes <= 0 infers max(label) + 1.
ProbeModel train_probe(const DMatrix& features, std::span<const int> labels, const ProbeConfig& config,
                       int num_classes = 0);

double evaluate_probe(const ProbeModel& model, const DMatrix& features, std::span<const int> labels);

struct DataSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Seeded shuffle; the first round(train_fraction * M) indices train.
DataSplit split_indices(std::size_t count, double train_fraction, std::uint64_t seed);

struct LayerProbeResult {
  int depth = 0;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
};

struct LayerwiseProbeOptions {
  ProbeConfig probe;
  double train_fraction = 0.8;
  std::uint64_t split_seed = 0;
};

/// One probe per depth over pre-pooled features: features_per_depth[d] is [M, D].
std::vector<LayerProbeResult> layerwise_probe(const std::vector<DMatrix>& features_per_depth,
                                              std::span<const int> labels, const LayerwiseProbeOptions& options);

/// Pools every representation depth of every bundle, then probes each depth.
/// All bundles must share a ModelConfig (MixedBundles otherwise).
std::vector<LayerProbeResult> layerwise_probe(std::span<const ActivationBundle> bundles,
                                              std::span<const int> labels, const LayerwiseProbeOptions& options);

/// Incrementally builds per-depth pooled feature matrices from bundles.
class PooledFeatures {
 public:
  explicit PooledFeatures(Pooling pooling) : pooling_(pooling) {}
  void add(const ActivationBundle& bundle);
  std::size_t count() const noexcept { return count_; }
  std::vector<DMatrix> matrices() const;

 private:
  Pooling pooling_;
  std::size_t count_ = 0;
  std::optional<ModelConfig> config_;
  std::vector<std::vector<double>> rows_;  // per depth, flattened [count, D]
};

}  // namespace vitlens
