#include "vitlens/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "vitlens/error.hpp"
#include "vitlens/rng.hpp"

namespace vitlens {

namespace {

// Twiddle table: entry (k * x) mod n of exp(sign * 2 pi i k x / n).
struct Twiddles {
  std::vector<double> cos_table;
  std::vector<double> sin_table;
  explicit Twiddles(int n) : cos_table(static_cast<std::size_t>(n)), sin_table(static_cast<std::size_t>(n)) {
    for (int k = 0; k < n; ++k) {
      const double angle = 2.0 * std::numbers::pi * k / n;
      cos_table[static_cast<std::size_t>(k)] = std::cos(angle);
      sin_table[static_cast<std::size_t>(k)] = std::sin(angle);
    }
  }
};

// In-place 1-D DFT along one axis. `sign` = -1 forward, +1 inverse.
void dft_axis(ComplexGrid& g, bool along_rows, double sign) {
  const int n = along_rows ? g.cols : g.rows;
  const int lines = along_rows ? g.rows : g.cols;
  const Twiddles tw(n);
  std::vector<double> in_re(static_cast<std::size_t>(n)), in_im(static_cast<std::size_t>(n));
  for (int line = 0; line < lines; ++line) {
    auto at = [&](int i) { return along_rows ? g.index(line, i) : g.index(i, line); };
    for (int i = 0; i < n; ++i) {
      in_re[static_cast<std::size_t>(i)] = g.re[at(i)];
      in_im[static_cast<std::size_t>(i)] = g.im[at(i)];
    }
    for (int k = 0; k < n; ++k) {
      double sr = 0.0, si = 0.0;
      for (int x = 0; x < n; ++x) {
        const auto t = static_cast<std::size_t>((static_cast<long long>(k) * x) % n);
        const double c = tw.cos_table[t];
        const double s = sign * tw.sin_table[t];
        sr += in_re[static_cast<std::size_t>(x)] * c - in_im[static_cast<std::size_t>(x)] * s;
        si += in_re[static_cast<std::size_t>(x)] * s + in_im[static_cast<std::size_t>(x)] * c;
      }
      g.re[at(k)] = sr;
      g.im[at(k)] = si;
    }
  }
}

}  // namespace

double ComplexGrid::magnitude(int u, int v) const { return std::hypot(re[index(u, v)], im[index(u, v)]); }

ComplexGrid dft2(const ComplexGrid& grid) {
  ComplexGrid out = grid;
  dft_axis(out, true, -1.0);
  dft_axis(out, false, -1.0);
  return out;
}

ComplexGrid dft2(const Tensor& grid) {
  require(grid.rank() == 2, ErrorCode::kShapeError, "dft2 needs a [h, w] grid, got " + shape_to_string(grid.shape()));
  ComplexGrid g(static_cast<int>(grid.dim(0)), static_cast<int>(grid.dim(1)));
  std::copy(grid.data().begin(), grid.data().end(), g.re.begin());
  return dft2(g);
}

ComplexGrid idft2(const ComplexGrid& spectrum) {
  ComplexGrid out = spectrum;
  dft_axis(out, true, 1.0);
  dft_axis(out, false, 1.0);
  const double scale = 1.0 / (static_cast<double>(out.rows) * out.cols);
  for (auto& v : out.re) v *= scale;
  for (auto& v : out.im) v *= scale;
  return out;
}

int centered_index(int u, int n) noexcept { return u <= (n - 1) / 2 ? u : u - n; }

double radial_frequency(int u, int v, int h, int w) noexcept {
  const double fu = centered_index(u, h) / (h / 2.0);
  const double fv = centered_index(v, w) / (w / 2.0);
  return std::min(1.0, std::sqrt(fu * fu + fv * fv) / std::numbers::sqrt2);
}

void FrequencyBand::validate() const {
  require(low >= 0.0 && low < high && high <= 1.0, ErrorCode::kInvalidBand,
          "frequency band must satisfy 0 <= low < high <= 1, got [" + std::to_string(low) + ", " +
              std::to_string(high) + "]");
}

std::vector<FrequencyBand> tile_bands(double window) {
  require(window > 0.0 && window <= 1.0, ErrorCode::kInvalidBand, "band window must lie in (0, 1]");
  std::vector<FrequencyBand> bands;
  const int count = static_cast<int>(std::lround(1.0 / window));
  for (int i = 0; i < count; ++i) {
    bands.push_back({i * window, i + 1 == count ? 1.0 : (i + 1) * window});
  }
  return bands;
}

AmplitudeAccumulator::AmplitudeAccumulator(FourierOptions options) : options_(options) {
  require(options_.bins >= 1, ErrorCode::kInvalidArgument, "need at least one frequency bin");
  require(options_.epsilon > 0.0, ErrorCode::kInvalidArgument, "epsilon must be positive");
  log_sum_.assign(static_cast<std::size_t>(options_.bins), 0.0);
  counts_.assign(static_cast<std::size_t>(options_.bins), 0);
}

void AmplitudeAccumulator::add(const Tensor& reprs, int grid_h, int grid_w, bool exclude_cls) {
  require(reprs.rank() == 2, ErrorCode::kShapeError, "Fourier analysis needs [N, D] representations");
  const std::int64_t first = exclude_cls ? 1 : 0;
  require(grid_h >= 1 && grid_w >= 1 && reprs.dim(0) - first == static_cast<std::int64_t>(grid_h) * grid_w,
          ErrorCode::kShapeError,
          std::to_string(reprs.dim(0) - first) + " spatial tokens do not fill a " + std::to_string(grid_h) + "x" +
              std::to_string(grid_w) + " grid");
  const auto channels = reprs.dim(1);
  const int bins = options_.bins;

  std::vector<int> bin_of(static_cast<std::size_t>(grid_h) * grid_w);
  for (int u = 0; u < grid_h; ++u) {
    for (int v = 0; v < grid_w; ++v) {
      const double r = radial_frequency(u, v, grid_h, grid_w);
      bin_of[static_cast<std::size_t>(u) * grid_w + v] = std::min(bins - 1, static_cast<int>(r * bins));
    }
  }

  ComplexGrid map(grid_h, grid_w);
  for (std::int64_t c = 0; c < channels; ++c) {
    std::fill(map.im.begin(), map.im.end(), 0.0);
    for (int t = 0; t < grid_h * grid_w; ++t) map.re[static_cast<std::size_t>(t)] = reprs.at(t + first, c);
    const ComplexGrid spectrum = dft2(map);
    for (int u = 0; u < grid_h; ++u) {
      for (int v = 0; v < grid_w; ++v) {
        const auto b = static_cast<std::size_t>(bin_of[static_cast<std::size_t>(u) * grid_w + v]);
        log_sum_[b] += std::log(spectrum.magnitude(u, v) + options_.epsilon);
        ++counts_[b];
      }
    }
  }
  ++maps_;
}

AmplitudeSpectrum AmplitudeAccumulator::result(int layer) const {
  require(maps_ > 0, ErrorCode::kEmptyRun, "no token maps accumulated");
  AmplitudeSpectrum s;
  s.layer = layer;
  for (int b = 0; b < options_.bins; ++b) {
    const auto i = static_cast<std::size_t>(b);
    if (counts_[i] == 0) continue;
    s.bins.push_back({(b + 0.5) / options_.bins, log_sum_[i] / static_cast<double>(counts_[i]), counts_[i]});
  }
  s.delta_log_amplitude = s.bins.back().mean_log_amplitude - s.bins.front().mean_log_amplitude;
  return s;
}

AmplitudeSpectrum relative_log_amplitude(const Tensor& reprs, int grid_h, int grid_w, bool exclude_cls,
                                         const FourierOptions& options) {
  AmplitudeAccumulator acc(options);
  acc.add(reprs, grid_h, grid_w, exclude_cls);
  return acc.result();
}

Tensor band_noise(int height, int width, const FrequencyBand& band, double rms, std::uint64_t seed) {
  band.validate();
  require(height >= 1 && width >= 1, ErrorCode::kShapeError, "noise field must be at least 1x1");
  require(rms > 0.0 && std::isfinite(rms), ErrorCode::kInvalidArgument, "noise rms must be positive");

  Rng rng(seed);
  ComplexGrid field(height, width);
  for (double& v : field.re) v = rng.normal();
  ComplexGrid spectrum = dft2(field);

  // The radial frequency of (u, v) equals that of its conjugate partner
  // (-u, -v), so the filtered spectrum stays Hermitian and its inverse real.
  std::size_t kept = 0;
  for (int u = 0; u < height; ++u) {
    for (int v = 0; v < width; ++v) {
      const auto i = spectrum.index(u, v);
      if (band.contains(radial_frequency(u, v, height, width))) {
        ++kept;
      } else {
        spectrum.re[i] = 0.0;
        spectrum.im[i] = 0.0;
      }
    }
  }
  require(kept > 0, ErrorCode::kEmptyBand,
          "no frequency bin of a " + std::to_string(height) + "x" + std::to_string(width) + " grid lies in [" +
              std::to_string(band.low) + ", " + std::to_string(band.high) + "]");

  const ComplexGrid filtered = idft2(spectrum);
  double power = 0.0;
  for (double v : filtered.re) power += v * v;
  const double current = std::sqrt(power / static_cast<double>(filtered.re.size()));
  require(current > 0.0, ErrorCode::kEmptyBand, "band-limited field has zero energy");
  const double scale = rms / current;

  Tensor out(Shape{height, width});
  for (std::size_t i = 0; i < filtered.re.size(); ++i) out[i] = static_cast<float>(filtered.re[i] * scale);
  return out;
}

}  // namespace vitlens
