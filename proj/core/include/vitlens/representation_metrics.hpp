#pragma once

#include <span>
#include <vector>

#include "vitlens/linalg.hpp"
#include "vitlens/tensor.hpp"

namespace vitlens {

/// Cosine similarity in double precision; 0 when either vector is zero.
double cosine(std::span<const float> a, std::span<const float> b);

/// Mean cosine similarity over unordered head pairs and tokens of [H, N, Dh].
double cosine_similarity_heads(const Tensor& head_outputs);

/// Mean per-token cosine similarity between two [N, D] representations.
double cosine_similarity_depth(const Tensor& before, const Tensor& after);

/// Mean cosine similarity over unordered token pairs of [N, D]. With
/// exclude_cls, token 0 is dropped first.
double cosine_similarity_tokens(const Tensor& reprs, bool exclude_cls);

enum class SpectrumLevel { kToken, kImage };
enum class SpectrumReference { kLargest, kSecondLargest };

const char* to_string(SpectrumLevel level);

inline constexpr double kDegenerateSigma = 1e-12;

struct SpectrumResult {
  std::vector<double> singular_values;  // descending
  std::vector<double> log_values;       // ln sigma_i, floored at ln(kDegenerateSigma)
  int reference_index = 1;
  std::vector<double> delta_log;        // ln sigma_i - ln sigma_ref
  SpectrumLevel level = SpectrumLevel::kToken;
  int layer = 0;
};

struct SpectrumOptions {
  SpectrumReference reference = SpectrumReference::kSecondLargest;
  bool centered = true;
};

/// Singular value spectrum of one image's tokens [N, D].
SpectrumResult token_spectrum(const Tensor& reprs, bool exclude_cls, const SpectrumOptions& options = {});

/// Spectrum of mean-pooled image vectors, one [N, D] tensor per image.
SpectrumResult image_spectrum(std::span<const Tensor> reprs, bool exclude_cls,
                              const SpectrumOptions& options = {});

/// Spectrum of an explicit [M, D] matrix of image vectors.
SpectrumResult image_spectrum(const DMatrix& pooled, const SpectrumOptions& options = {});

/// Mean-pools spatial tokens of [N, D] (skipping token 0 when exclude_cls).
std::vector<double> mean_pool(const Tensor& reprs, bool exclude_cls);

/// Streaming dataset aggregate of token spectra. Keeps both the mean of
/// sigma and the mean of ln sigma per index; delta_log is taken on the
/// latter.
class SpectrumAccumulator {
 public:
  void add(const SpectrumResult& spectrum);
  std::size_t count() const noexcept { return count_; }
  /// singular_values = mean sigma, log_values = mean ln sigma,
  /// delta_log = mean ln sigma_i - mean ln sigma_ref.
  SpectrumResult result(SpectrumReference reference, SpectrumLevel level, int layer) const;

 private:
  std::size_t count_ = 0;
  std::vector<double> sigma_sum_;
  std::vector<double> log_sum_;
};

}  // namespace vitlens
