#pragma once

#include <filesystem>

#include "vitlens/tensor.hpp"

namespace vitlens {

/// Reads binary (P5/P6) or ASCII (P2/P3) PGM/PPM into [C, H, W] floats in
/// [0, 1]. Throws IoError on unreadable or malformed files.
Tensor read_pnm(const std::filesystem::path& path);

/// Writes a [1|3, H, W] tensor as binary PGM/PPM, clamping to [0, 1].
void write_pnm(const Tensor& image, const std::filesystem::path& path);

/// Nearest-neighbour resize of a [C, H, W] image to [C, size, size].
Tensor resize_nearest(const Tensor& image, int size);

/// Converts between channel counts: 1 -> 3 replicates, 3 -> 1 averages.
Tensor convert_channels(const Tensor& image, int channels);

}  // namespace vitlens
