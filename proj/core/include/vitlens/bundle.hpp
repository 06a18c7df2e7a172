#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vitlens/model.hpp"
#include "vitlens/nadf.hpp"
#include "vitlens/tensor.hpp"

namespace vitlens {

/// Activations of one image: post-softmax attention per layer and token
/// representations before block 0 and after every block.
struct ActivationBundle {
  ModelConfig config;
  std::vector<Tensor> attention;        // depth x [H, N, N]
  std::vector<Tensor> representations;  // (depth + 1) x [N, D]
  std::map<std::string, Tensor> extras;
  nlohmann::json meta = nlohmann::json::object();

  int grid_h() const noexcept { return config.grid(); }
  int grid_w() const noexcept { return config.grid(); }
};

// Well-known extras written by the runtime.
inline constexpr const char* kInputImageExtra = "input/image";
std::string head_outputs_extra(int layer);    // [H, N, Dh] or [H, N, D]
std::string post_attention_extra(int layer);  // [N, D], x + Attn(LN(x))

inline constexpr double kRowSumTolerance = 1e-4;

struct BundleValidation {
  bool allow_non_finite = false;
  double row_sum_tolerance = kRowSumTolerance;
};

/// Throws InvalidBundle (structure, stochasticity) or NonFiniteData.
void validate_bundle(const ActivationBundle& bundle, const BundleValidation& options = {});

nadf::Container to_container(const ActivationBundle& bundle);
ActivationBundle from_container(nadf::Container container, const BundleValidation& options = {});

/// Validates, then serializes. Returns the number of bytes written.
std::uint64_t write_bundle(const ActivationBundle& bundle, std::ostream& out);
ActivationBundle read_bundle(std::istream& in, const BundleValidation& options = {});

void save_bundle(const ActivationBundle& bundle, const std::filesystem::path& path);
ActivationBundle load_bundle(const std::filesystem::path& path, const BundleValidation& options = {});

bool bit_equal(const ActivationBundle& a, const ActivationBundle& b);

}  // namespace vitlens
