#include "vitlens/robustness.hpp"

#include <algorithm>

#include "vitlens/error.hpp"
#include "vitlens/parallel.hpp"
#include "vitlens/rng.hpp"

namespace vitlens {

int classify(const Tensor& image, const Weights& weights, const ModelConfig& config, const ClassifierHead& head,
             Pooling pooling, const AttentionRestriction& restriction) {
  ForwardOptions options;
  options.restriction = restriction;
  options.head_outputs = HeadOutputCapture::kNone;
  options.capture_post_attention = false;
  options.keep_input = false;
  const ActivationBundle bundle = forward(image, weights, config, options);
  const Tensor pooled = pool(bundle.representations.back(), pooling, config.use_cls);

  const auto classes = head.weight.dim(1);
  std::vector<double> logits(static_cast<std::size_t>(classes));
  for (std::int64_t c = 0; c < classes; ++c) logits[static_cast<std::size_t>(c)] = head.bias[static_cast<std::size_t>(c)];
  for (std::int64_t i = 0; i < pooled.dim(0); ++i) {
    for (std::int64_t c = 0; c < classes; ++c) {
      logits[static_cast<std::size_t>(c)] += static_cast<double>(pooled[static_cast<std::size_t>(i)]) * head.weight.at(i, c);
    }
  }
  return static_cast<int>(std::max_element(logits.begin(), logits.end()) - logits.begin());
}

Tensor add_band_noise(const Tensor& image, const FrequencyBand& band, double rms, std::uint64_t seed,
                      std::size_t band_index, std::size_t image_index, bool clamp) {
  Tensor noisy = image;
  if (rms == 0.0) return noisy;
  const auto h = static_cast<int>(image.dim(1));
  const auto w = static_cast<int>(image.dim(2));
  const std::uint64_t image_seed = mix_seed(mix_seed(seed, band_index), image_index);
  for (std::int64_t c = 0; c < image.dim(0); ++c) {
    const Tensor noise = band_noise(h, w, band, rms, mix_seed(image_seed, static_cast<std::uint64_t>(c)));
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        float v = noisy.at(c, y, x) + noise.at(y, x);
        if (clamp) v = std::clamp(v, 0.0f, 1.0f);
        noisy.at(c, y, x) = v;
      }
    }
  }
  return noisy;
}

std::vector<BandRobustness> robustness_curve(const Weights& weights, const ModelConfig& config,
                                             const std::optional<ClassifierHead>& head,
                                             const LabeledImages& dataset, const std::vector<FrequencyBand>& bands,
                                             const RobustnessOptions& options) {
  require(head.has_value() || weights.head.has_value(), ErrorCode::kNoClassifier,
          "robustness curve needs a classifier head");
  const ClassifierHead& classifier = head ? *head : *weights.head;
  require(classifier.weight.rank() == 2 && classifier.weight.dim(0) == config.dim, ErrorCode::kShapeError,
          "classifier weight must be [D, classes]");
  require(options.rms >= 0.0, ErrorCode::kInvalidArgument, "noise rms must be non-negative");
  require(dataset.images.size() == dataset.labels.size(), ErrorCode::kShapeError, "images and labels differ in count");
  require(!dataset.images.empty(), ErrorCode::kEmptyRun, "robustness curve needs at least one image");
  for (const auto& band : bands) band.validate();

  const std::size_t n = dataset.size();
  auto accuracy = [&](auto&& make_image) {
    std::vector<char> correct(n, 0);
    parallel_for(n, [&](std::size_t i) {
      const int predicted = classify(make_image(i), weights, config, classifier, options.pooling, options.restriction);
      correct[i] = predicted == dataset.labels[i];
    });
    return static_cast<double>(std::count(correct.begin(), correct.end(), 1)) / static_cast<double>(n);
  };

  const double clean = accuracy([&](std::size_t i) -> const Tensor& { return dataset.images[i]; });
  std::vector<BandRobustness> curve;
  for (std::size_t b = 0; b < bands.size(); ++b) {
    const double noisy = options.rms == 0.0 ? clean : accuracy([&](std::size_t i) {
      return add_band_noise(dataset.images[i], bands[b], options.rms, options.seed, b, i, options.clamp);
    });
    curve.push_back({bands[b], clean, noisy, clean - noisy});
  }
  return curve;
}

}  // namespace vitlens
