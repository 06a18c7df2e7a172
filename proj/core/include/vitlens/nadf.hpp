#pragma once

// NADF: a little-endian binary container of named float32 tensors.
//
//   offset 0   magic "NADF"
//   offset 4   version            u32 LE (currently 1)
//   offset 8   header_json_len    u64 LE
//   offset 16  header_json        UTF-8, compact JSON object
//   ...        zero padding up to the next multiple of 64
//   payload    tensor blobs, each starting at a multiple of 64 bytes
//
// The header object holds arbitrary metadata plus a "tensors" index mapping
// name -> {dtype, shape, byte_offset, byte_len}. byte_offset is relative to
// the start of the payload (which is itself 64-byte aligned in the file).

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vitlens/tensor.hpp"

namespace vitlens::nadf {

inline constexpr std::array<char, 4> kMagic{'N', 'A', 'D', 'F'};
inline constexpr std::uint32_t kVersion = 1;
inline constexpr std::uint64_t kAlignment = 64;
inline constexpr std::size_t kPreambleSize = 16;

enum class DType { kFloat32, kFloat16 };

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

struct Container {
  nlohmann::json header = nlohmann::json::object();  // everything except "tensors"
  std::vector<NamedTensor> tensors;                    // written in this order

  const Tensor* find(const std::string& name) const;
};

struct ReadOptions {
  bool allow_non_finite = false;
};

std::uint64_t align_up(std::uint64_t value) noexcept;

/// Returns the number of bytes written.
std::uint64_t write_container(const Container& container, std::ostream& out);

Container read_container(std::istream& in, const ReadOptions& options = {});

/// Parses only the preamble and header JSON (tensor index included).
nlohmann::json read_header(std::istream& in);

void save_container(const Container& container, const std::filesystem::path& path);
Container load_container(const std::filesystem::path& path, const ReadOptions& options = {});
nlohmann::json peek_header(const std::filesystem::path& path);

/// SHA-256 (lowercase hex) of the little-endian float32 payload of `tensor`.
std::string tensor_checksum(const Tensor& tensor);

/// SHA-256 (lowercase hex) of an arbitrary byte range.
std::string sha256_hex(std::span<const unsigned char> bytes);

std::string file_sha256(const std::filesystem::path& path);

}  // namespace vitlens::nadf
