#include "vitlens/probe.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "vitlens/error.hpp"
#include "vitlens/rng.hpp"

namespace vitlens {

Tensor pool(const Tensor& reprs, Pooling pooling, bool use_cls) {
  require(reprs.rank() == 2, ErrorCode::kShapeError, "pooling needs [N, D]");
  const auto d = reprs.dim(1);
  if (pooling == Pooling::kCls) {
    require(use_cls, ErrorCode::kNoClsToken, "CLS pooling requested but the model has no CLS token");
    return Tensor(Shape{d}, std::vector<float>(reprs.row(0).begin(), reprs.row(0).end()));
  }
  const std::int64_t first = use_cls ? 1 : 0;
  require(reprs.dim(0) > first, ErrorCode::kNotEnoughTokens, "no spatial tokens to pool");
  std::vector<double> sum(static_cast<std::size_t>(d), 0.0);
  for (std::int64_t t = first; t < reprs.dim(0); ++t) {
    const auto row = reprs.row(t);
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += row[i];
  }
  Tensor out(Shape{d});
  for (std::size_t i = 0; i < sum.size(); ++i) {
    out[i] = static_cast<float>(sum[i] / static_cast<double>(reprs.dim(0) - first));
  }
  return out;
}

void ProbeConfig::validate() const {
  require(learning_rate > 0.0, ErrorCode::kInvalidArgument, "learning rate must be positive");
  require(epochs >= 1, ErrorCode::kInvalidArgument, "epochs must be >= 1");
  require(batch_size >= 1, ErrorCode::kInvalidArgument, "batch size must be >= 1");
  require(weight_decay >= 0.0, ErrorCode::kInvalidArgument, "weight decay must be non-negative");
}

std::vector<double> ProbeModel::logits(std::span<const double> x) const {
  std::vector<double> out(bias.begin(), bias.end());
  for (int i = 0; i < dim; ++i) {
    const double xi = x[static_cast<std::size_t>(i)];
    const double* w = weights.data() + static_cast<std::size_t>(i) * num_classes;
    for (int c = 0; c < num_classes; ++c) out[static_cast<std::size_t>(c)] += xi * w[c];
  }
  return out;
}

int ProbeModel::predict(std::span<const double> x) const {
  const auto z = logits(x);
  // max_element returns the first maximum, i.e. the lowest tied index.
  return static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
}

ClassifierHead ProbeModel::to_head() const {
  Tensor w(Shape{dim, num_classes});
  Tensor b(Shape{num_classes});
  for (std::size_t i = 0; i < weights.size(); ++i) w[i] = static_cast<float>(weights[i]);
  for (std::size_t i = 0; i < bias.size(); ++i) b[i] = static_cast<float>(bias[i]);
  return {std::move(w), std::move(b)};
}

namespace {

// Accumulates loss and gradients over `rows`; gradients are averaged.
double batch_loss(const ProbeModel& model, const DMatrix& features, std::span<const int> labels,
                  std::span<const std::size_t> rows, std::vector<double>* gw, std::vector<double>* gb) {
  const auto classes = static_cast<std::size_t>(model.num_classes);
  if (gw) gw->assign(model.weights.size(), 0.0);
  if (gb) gb->assign(model.bias.size(), 0.0);
  std::vector<double> prob(classes);
  double loss = 0.0;
  for (std::size_t r : rows) {
    const auto x = features.row(r);
    const auto z = model.logits(x);
    const double zmax = *std::max_element(z.begin(), z.end());
    double total = 0.0;
    for (std::size_t c = 0; c < classes; ++c) {
      prob[c] = std::exp(z[c] - zmax);
      total += prob[c];
    }
    const auto y = static_cast<std::size_t>(labels[r]);
    loss += zmax + std::log(total) - z[y];
    if (!gw && !gb) continue;
    for (std::size_t c = 0; c < classes; ++c) {
      const double g = prob[c] / total - (c == y ? 1.0 : 0.0);
      if (gb) (*gb)[c] += g;
      if (gw) {
        for (std::size_t i = 0; i < x.size(); ++i) (*gw)[i * classes + c] += g * x[i];
      }
    }
  }
  const double inv = 1.0 / static_cast<double>(rows.size());
  if (gw) for (double& g : *gw) g *= inv;
  if (gb) for (double& g : *gb) g *= inv;
  return loss * inv;
}

void check_labels(const DMatrix& features, std::span<const int> labels, int num_classes) {
  require(features.rows() == labels.size(), ErrorCode::kShapeError, "feature rows and labels differ in count");
  for (int y : labels) {
    require(y >= 0 && y < num_classes, ErrorCode::kInvalidArgument,
            "label " + std::to_string(y) + " outside [0, " + std::to_string(num_classes) + ")");
  }
}

}  // namespace

double probe_loss(const ProbeModel& model, const DMatrix& features, std::span<const int> labels,
                  double weight_decay, std::vector<double>* grad_weights, std::vector<double>* grad_bias) {
  check_labels(features, labels, model.num_classes);
  std::vector<std::size_t> all(features.rows());
  std::iota(all.begin(), all.end(), 0);
  double loss = batch_loss(model, features, labels, all, grad_weights, grad_bias);
  if (weight_decay > 0.0) {
    double sq = 0.0;
    for (std::size_t i = 0; i < model.weights.size(); ++i) {
      sq += model.weights[i] * model.weights[i];
      if (grad_weights) (*grad_weights)[i] += weight_decay * model.weights[i];
    }
    loss += 0.5 * weight_decay * sq;
  }
  return loss;
}

ProbeModel train_probe(const DMatrix& features, std::span<const int> labels, const ProbeConfig& config,
                       int num_classes) {
  config.validate();
  require(!labels.empty(), ErrorCode::kDegenerateLabels, "no training examples");
  if (num_classes <= 0) num_classes = *std::max_element(labels.begin(), labels.end()) + 1;
  check_labels(features, labels, num_classes);
  require(std::adjacent_find(labels.begin(), labels.end(), std::not_equal_to<>()) != labels.end(),
          ErrorCode::kDegenerateLabels, "all training labels belong to one class");
  require(num_classes >= 2 && features.rows() >= static_cast<std::size_t>(num_classes),
          ErrorCode::kDegenerateLabels, "need at least as many examples as classes, and two classes");
  for (double v : features.data()) require(std::isfinite(v), ErrorCode::kNumericalError, "features are not finite");

  ProbeModel model;
  model.dim = static_cast<int>(features.cols());
  model.num_classes = num_classes;
  model.weights.assign(features.cols() * static_cast<std::size_t>(num_classes), 0.0);
  model.bias.assign(static_cast<std::size_t>(num_classes), 0.0);

  std::vector<std::size_t> order(features.rows());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> gw, gb;
  const auto batch = static_cast<std::size_t>(config.batch_size);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    Rng rng(mix_seed(config.seed, static_cast<std::uint64_t>(epoch)));
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const auto rows = std::span<const std::size_t>(order).subspan(start, std::min(batch, order.size() - start));
      batch_loss(model, features, labels, rows, &gw, config.fit_bias ? &gb : nullptr);
      for (std::size_t i = 0; i < model.weights.size(); ++i) {
        model.weights[i] -= config.learning_rate * (gw[i] + config.weight_decay * model.weights[i]);
      }
      if (config.fit_bias) {
        for (std::size_t c = 0; c < model.bias.size(); ++c) model.bias[c] -= config.learning_rate * gb[c];
      }
    }
    const double loss = probe_loss(model, features, labels, config.weight_decay);
    require(std::isfinite(loss), ErrorCode::kNumericalError, "probe training diverged");
    model.training_log.push_back(loss);
  }
  return model;
}

double evaluate_probe(const ProbeModel& model, const DMatrix& features, std::span<const int> labels) {
  require(features.rows() == labels.size(), ErrorCode::kShapeError, "feature rows and labels differ in count");
  require(features.cols() == static_cast<std::size_t>(model.dim), ErrorCode::kShapeError,
          "feature width does not match the probe");
  if (labels.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t r = 0; r < features.rows(); ++r) {
    if (model.predict(features.row(r)) == labels[r]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

DataSplit split_indices(std::size_t count, double train_fraction, std::uint64_t seed) {
  require(train_fraction > 0.0 && train_fraction <= 1.0, ErrorCode::kInvalidArgument,
          "train fraction must lie in (0, 1]");
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));
  const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(count)));
  DataSplit split;
  split.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

namespace {

DMatrix select_rows(const DMatrix& m, std::span<const std::size_t> rows) {
  DMatrix out(rows.size(), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) std::copy(m.row(rows[i]).begin(), m.row(rows[i]).end(), out.row(i).begin());
  return out;
}

std::vector<int> select_labels(std::span<const int> labels, std::span<const std::size_t> rows) {
  std::vector<int> out;
  for (std::size_t r : rows) out.push_back(labels[r]);
  return out;
}

}  // namespace

std::vector<LayerProbeResult> layerwise_probe(const std::vector<DMatrix>& features_per_depth,
                                              std::span<const int> labels, const LayerwiseProbeOptions& options) {
  require(!features_per_depth.empty(), ErrorCode::kEmptyRun, "no representation depths to probe");
  require(!labels.empty(), ErrorCode::kEmptyRun, "no labeled examples");
  const int num_classes = *std::max_element(labels.begin(), labels.end()) + 1;
  const auto split = split_indices(labels.size(), options.train_fraction, options.split_seed);
  const auto train_labels = select_labels(labels, split.train);
  const auto test_labels = select_labels(labels, split.test);

  std::vector<LayerProbeResult> results;
  for (std::size_t d = 0; d < features_per_depth.size(); ++d) {
    const auto& features = features_per_depth[d];
    require(features.rows() == labels.size(), ErrorCode::kShapeError, "features and labels differ in count");
    const DMatrix train = select_rows(features, split.train);
    const DMatrix test = select_rows(features, split.test);
    const ProbeModel model = train_probe(train, train_labels, options.probe, num_classes);
    results.push_back({static_cast<int>(d), evaluate_probe(model, train, train_labels),
                       evaluate_probe(model, test, test_labels)});
  }
  return results;
}

void PooledFeatures::add(const ActivationBundle& bundle) {
  if (!config_) {
    config_ = bundle.config;
    rows_.resize(bundle.representations.size());
  }
  require(bundle.config == *config_, ErrorCode::kMixedBundles, "bundles do not share a model config");
  for (std::size_t d = 0; d < bundle.representations.size(); ++d) {
    const Tensor pooled = pool(bundle.representations[d], pooling_, config_->use_cls);
    rows_[d].insert(rows_[d].end(), pooled.data().begin(), pooled.data().end());
  }
  ++count_;
}

std::vector<DMatrix> PooledFeatures::matrices() const {
  std::vector<DMatrix> out;
  if (!config_) return out;
  for (const auto& flat : rows_) {
    DMatrix m(count_, static_cast<std::size_t>(config_->dim));
    std::copy(flat.begin(), flat.end(), m.data().begin());
    out.push_back(std::move(m));
  }
  return out;
}

std::vector<LayerProbeResult> layerwise_probe(std::span<const ActivationBundle> bundles,
                                              std::span<const int> labels, const LayerwiseProbeOptions& options) {
  require(bundles.size() == labels.size(), ErrorCode::kShapeError, "bundles and labels differ in count");
  PooledFeatures features(options.probe.pooling);
  for (const auto& b : bundles) features.add(b);
  return layerwise_probe(features.matrices(), labels, options);
}

}  // namespace vitlens
