#pragma once

#include <cstdint>
#include <vector>

#include "vitlens/tensor.hpp"

namespace vitlens {

/// Complex [rows, cols] grid stored as separate real/imaginary planes.
struct ComplexGrid {
  int rows = 0;
  int cols = 0;
  std::vector<double> re;
  std::vector<double> im;

  ComplexGrid() = default;
  ComplexGrid(int r, int c)
      : rows(r), cols(c), re(static_cast<std::size_t>(r) * c, 0.0), im(static_cast<std::size_t>(r) * c, 0.0) {}

  std::size_t index(int u, int v) const noexcept { return static_cast<std::size_t>(u) * cols + v; }
  double magnitude(int u, int v) const;
};

/// X[u,v] = sum_{x,y} g[x,y] exp(-2 pi i (u x / h + v y / w)), evaluated as
/// two passes of direct 1-D DFTs (rows, then columns).
ComplexGrid dft2(const Tensor& grid);
ComplexGrid dft2(const ComplexGrid& grid);

/// Inverse transform including the 1/(h w) factor.
ComplexGrid idft2(const ComplexGrid& spectrum);

/// Signed (centered) frequency index of unshifted index `u` on an axis of
/// length n: 0, 1, ..., then negative frequencies; the Nyquist index of an
/// even axis maps to -n/2.
int centered_index(int u, int n) noexcept;

/// Normalized radial frequency in [0, 1] of unshifted bin (u, v) on an h x w
/// grid: sqrt((u'/(h/2))^2 + (v'/(w/2))^2) / sqrt(2), with 1 meaning pi on
/// both axes.
double radial_frequency(int u, int v, int h, int w) noexcept;

struct FrequencyBand {
  double low = 0.0;
  double high = 1.0;

  /// Throws InvalidBand unless 0 <= low < high <= 1.
  void validate() const;
  bool contains(double r) const noexcept { return r >= low && r <= high; }
  double window() const noexcept { return high - low; }
};

/// Bands of width `window` tiling [0, 1].
std::vector<FrequencyBand> tile_bands(double window = 0.1);

struct AmplitudeBin {
  double frequency = 0.0;  // bin center, normalized
  double mean_log_amplitude = 0.0;
  std::size_t count = 0;
};

/// Radially binned log amplitudes. Only non-empty bins are listed;
/// delta_log_amplitude = last bin - first bin.
struct AmplitudeSpectrum {
  std::vector<AmplitudeBin> bins;
  double delta_log_amplitude = 0.0;
  int layer = 0;
};

inline constexpr int kDefaultFrequencyBins = 11;
inline constexpr double kAmplitudeEpsilon = 1e-8;

struct FourierOptions {
  int bins = kDefaultFrequencyBins;
  double epsilon = kAmplitudeEpsilon;
};

/// Streams token maps and accumulates ln(|X| + eps) per radial bin over
/// every channel and every added map.
class AmplitudeAccumulator {
 public:
  explicit AmplitudeAccumulator(FourierOptions options = {});

  /// reprs is [N, D]; spatial tokens (token 0 skipped when exclude_cls)
  /// reshape row-major to [grid_h, grid_w, D].
  void add(const Tensor& reprs, int grid_h, int grid_w, bool exclude_cls);
  std::size_t maps() const noexcept { return maps_; }
  AmplitudeSpectrum result(int layer = 0) const;

 private:
  FourierOptions options_;
  std::vector<double> log_sum_;
  std::vector<std::size_t> counts_;
  std::size_t maps_ = 0;
};

AmplitudeSpectrum relative_log_amplitude(const Tensor& reprs, int grid_h, int grid_w, bool exclude_cls,
                                         const FourierOptions& options = {});

/// Real Gaussian noise whose spectrum is confined to `band`, rescaled to
/// the requested root-mean-square. Deterministic in `seed`.
Tensor band_noise(int height, int width, const FrequencyBand& band, double rms, std::uint64_t seed);

}  // namespace vitlens
