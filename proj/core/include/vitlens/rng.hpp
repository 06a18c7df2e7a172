#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace vitlens {

/// Derives an independent stream seed from (seed, stream) with splitmix64.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

// std::normal_distribution and std::shuffle are implementation-defined, so
// every draw goes through these helpers on top of the fully specified
// mt19937_64 engine. Results are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();

  /// Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n);

  /// Standard normal via Box-Muller.
  double normal();

  /// Normal with standard deviation `std`, resampled until |x| <= bound * std.
  double truncated_normal(double std, double bound = 2.0);

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

/// Standard deviation of a normal(0, std) truncated to [-bound*std, bound*std].
double truncated_normal_std(double std, double bound = 2.0);

}  // namespace vitlens
