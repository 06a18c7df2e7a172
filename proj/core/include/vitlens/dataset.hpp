#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "vitlens/model.hpp"
#include "vitlens/tensor.hpp"

namespace vitlens {

struct LabeledImages {
  std::vector<Tensor> images;  // each [C, S, S]
  std::vector<int> labels;
  std::vector<std::string> names;

  std::size_t size() const noexcept { return images.size(); }
};

/// Class-conditional synthetic images. Each class owns a per-channel
/// brightness level spread over [0.5 - offset, 0.5 + offset]; every pixel
/// adds independent Gaussian texture with std `texture_std`.
struct SyntheticOptions {
  int classes = 2;
  double offset = 0.25;
  double texture_std = 0.1;
  std::uint64_t seed = 0;
};

/// Labels cycle 0, 1, ..., classes-1 over the images.
LabeledImages synthetic_images(const ModelConfig& config, int count, const SyntheticOptions& options);

/// Sorted `.nad` files in `dir` whose header kind is "activations".
std::vector<std::filesystem::path> list_bundles(const std::filesystem::path& dir);

/// PGM/PPM files in `dir`, sorted by name.
std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir);

/// Reads `name,label` rows (an optional header row whose second field is
/// not an integer is skipped). Keys are file stems.
std::map<std::string, int> read_labels_csv(const std::filesystem::path& path);

}  // namespace vitlens
