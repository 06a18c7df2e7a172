#include "vitlens/representation_metrics.hpp"

#include <algorithm>
#include <cmath>

#include "vitlens/error.hpp"

namespace vitlens {

double cosine(std::span<const float> a, std::span<const float> b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<double>(a[i]) * b[i];
    na += static_cast<double>(a[i]) * a[i];
    nb += static_cast<double>(b[i]) * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

double cosine_similarity_heads(const Tensor& head_outputs) {
  require(head_outputs.rank() == 3, ErrorCode::kShapeError,
          "head outputs must be [H, N, Dh], got " + shape_to_string(head_outputs.shape()));
  const auto heads = head_outputs.dim(0);
  const auto n = head_outputs.dim(1);
  const auto dh = static_cast<std::size_t>(head_outputs.dim(2));
  require(heads >= 2, ErrorCode::kNotEnoughHeads, "need at least two heads");
  const auto data = head_outputs.data();
  auto vec = [&](std::int64_t h, std::int64_t t) {
    return data.subspan(static_cast<std::size_t>(h * n + t) * dh, dh);
  };
  double total = 0.0;
  std::size_t count = 0;
  for (std::int64_t i = 0; i < heads; ++i) {
    for (std::int64_t j = i + 1; j < heads; ++j) {
      for (std::int64_t t = 0; t < n; ++t) {
        total += cosine(vec(i, t), vec(j, t));
        ++count;
      }
    }
  }
  return total / static_cast<double>(count);
}

double cosine_similarity_depth(const Tensor& before, const Tensor& after) {
  require(before.rank() == 2 && before.shape() == after.shape(), ErrorCode::kShapeError,
          "depth similarity needs matching [N, D] tensors, got " + shape_to_string(before.shape()) +
              " and " + shape_to_string(after.shape()));
  double total = 0.0;
  for (std::int64_t t = 0; t < before.dim(0); ++t) total += cosine(before.row(t), after.row(t));
  return total / static_cast<double>(before.dim(0));
}

double cosine_similarity_tokens(const Tensor& reprs, bool exclude_cls) {
  require(reprs.rank() == 2, ErrorCode::kShapeError, "token similarity needs [N, D]");
  const std::int64_t first = exclude_cls ? 1 : 0;
  const std::int64_t n = reprs.dim(0);
  require(n - first >= 2, ErrorCode::kNotEnoughTokens, "need at least two tokens");
  double total = 0.0;
  std::size_t count = 0;
  for (std::int64_t i = first; i < n; ++i) {
    for (std::int64_t j = i + 1; j < n; ++j) {
      total += cosine(reprs.row(i), reprs.row(j));
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

const char* to_string(SpectrumLevel level) { return level == SpectrumLevel::kToken ? "token" : "image"; }

namespace {

int reference_index(SpectrumReference reference) {
  return reference == SpectrumReference::kLargest ? 0 : 1;
}

SpectrumResult spectrum_of(DMatrix m, const SpectrumOptions& options, SpectrumLevel level) {
  if (options.centered) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      double mean = 0.0;
      for (std::size_t i = 0; i < m.rows(); ++i) mean += m(i, j);
      mean /= static_cast<double>(m.rows());
      for (std::size_t i = 0; i < m.rows(); ++i) m(i, j) -= mean;
    }
  }
  SpectrumResult result;
  result.level = level;
  result.singular_values = svd(m).singular_values;
  result.reference_index = reference_index(options.reference);
  require(static_cast<std::size_t>(result.reference_index) < result.singular_values.size(),
          ErrorCode::kDegenerateSpectrum, "spectrum has no second singular value");
  const double ref = result.singular_values[static_cast<std::size_t>(result.reference_index)];
  require(ref > kDegenerateSigma, ErrorCode::kDegenerateSpectrum,
          "reference singular value " + std::to_string(ref) + " is degenerate");
  for (double s : result.singular_values) result.log_values.push_back(std::log(std::max(s, kDegenerateSigma)));
  const double ref_log = result.log_values[static_cast<std::size_t>(result.reference_index)];
  for (double l : result.log_values) result.delta_log.push_back(l - ref_log);
  return result;
}

}  // namespace

std::vector<double> mean_pool(const Tensor& reprs, bool exclude_cls) {
  require(reprs.rank() == 2, ErrorCode::kShapeError, "pooling needs [N, D]");
  const std::int64_t first = exclude_cls ? 1 : 0;
  require(reprs.dim(0) > first, ErrorCode::kNotEnoughTokens, "no spatial tokens to pool");
  std::vector<double> pooled(static_cast<std::size_t>(reprs.dim(1)), 0.0);
  for (std::int64_t t = first; t < reprs.dim(0); ++t) {
    const auto row = reprs.row(t);
    for (std::size_t i = 0; i < pooled.size(); ++i) pooled[i] += row[i];
  }
  for (double& v : pooled) v /= static_cast<double>(reprs.dim(0) - first);
  return pooled;
}

SpectrumResult token_spectrum(const Tensor& reprs, bool exclude_cls, const SpectrumOptions& options) {
  require(reprs.rank() == 2, ErrorCode::kShapeError, "token spectrum needs [N, D]");
  const std::int64_t first = exclude_cls ? 1 : 0;
  const std::int64_t n = reprs.dim(0) - first;
  require(n >= 2, ErrorCode::kNotEnoughTokens, "token spectrum needs at least two tokens");
  DMatrix m(static_cast<std::size_t>(n), static_cast<std::size_t>(reprs.dim(1)));
  for (std::int64_t t = 0; t < n; ++t) {
    const auto row = reprs.row(t + first);
    for (std::size_t j = 0; j < m.cols(); ++j) m(static_cast<std::size_t>(t), j) = row[j];
  }
  return spectrum_of(std::move(m), options, SpectrumLevel::kToken);
}

SpectrumResult image_spectrum(const DMatrix& pooled, const SpectrumOptions& options) {
  require(pooled.rows() >= 2, ErrorCode::kNotEnoughImages, "image spectrum needs at least two images");
  return spectrum_of(pooled, options, SpectrumLevel::kImage);
}

SpectrumResult image_spectrum(std::span<const Tensor> reprs, bool exclude_cls, const SpectrumOptions& options) {
  require(reprs.size() >= 2, ErrorCode::kNotEnoughImages, "image spectrum needs at least two images");
  const auto d = static_cast<std::size_t>(reprs.front().dim(1));
  DMatrix pooled(reprs.size(), d);
  for (std::size_t i = 0; i < reprs.size(); ++i) {
    require(reprs[i].rank() == 2 && static_cast<std::size_t>(reprs[i].dim(1)) == d, ErrorCode::kShapeError,
            "image representations must share a width");
    const auto v = mean_pool(reprs[i], exclude_cls);
    std::copy(v.begin(), v.end(), pooled.row(i).begin());
  }
  return image_spectrum(pooled, options);
}

void SpectrumAccumulator::add(const SpectrumResult& spectrum) {
  if (count_ == 0) {
    sigma_sum_.assign(spectrum.singular_values.size(), 0.0);
    log_sum_.assign(spectrum.singular_values.size(), 0.0);
  }
  require(spectrum.singular_values.size() == sigma_sum_.size(), ErrorCode::kMixedBundles,
          "spectra have differing lengths");
  for (std::size_t i = 0; i < sigma_sum_.size(); ++i) {
    sigma_sum_[i] += spectrum.singular_values[i];
    log_sum_[i] += spectrum.log_values[i];
  }
  ++count_;
}

SpectrumResult SpectrumAccumulator::result(SpectrumReference reference, SpectrumLevel level, int layer) const {
  require(count_ > 0, ErrorCode::kEmptyRun, "no spectra accumulated");
  SpectrumResult r;
  r.level = level;
  r.layer = layer;
  r.reference_index = reference_index(reference);
  require(static_cast<std::size_t>(r.reference_index) < sigma_sum_.size(), ErrorCode::kDegenerateSpectrum,
          "spectrum has no second singular value");
  const double inv = 1.0 / static_cast<double>(count_);
  for (std::size_t i = 0; i < sigma_sum_.size(); ++i) {
    r.singular_values.push_back(sigma_sum_[i] * inv);
    r.log_values.push_back(log_sum_[i] * inv);
  }
  const double ref = r.log_values[static_cast<std::size_t>(r.reference_index)];
  for (double l : r.log_values) r.delta_log.push_back(l - ref);
  return r;
}

}  // namespace vitlens
