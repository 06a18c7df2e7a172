#include "vitlens/nadf.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include <openssl/evp.h>

#include "vitlens/error.hpp"

namespace vitlens::nadf {

namespace {

static_assert(sizeof(float) == 4);

template <typename T>
T byteswap(T value) noexcept {
  if constexpr (sizeof(T) == 4) {
    return static_cast<T>(__builtin_bswap32(static_cast<std::uint32_t>(value)));
  } else {
    return static_cast<T>(__builtin_bswap64(static_cast<std::uint64_t>(value)));
  }
}

template <typename T>
void put_le(std::string& buffer, T value) {
  if constexpr (std::endian::native == std::endian::big) value = byteswap(value);
  char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  buffer.append(bytes, sizeof(T));
}

template <typename T>
T get_le(const char* bytes) {
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) value = byteswap(value);
  return value;
}

std::string float_bytes_le(std::span<const float> values) {
  std::string bytes(values.size() * 4, '\0');
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(bytes.data(), values.data(), bytes.size());
  } else {
    for (std::size_t i = 0; i < values.size(); ++i) {
      auto bits = byteswap(std::bit_cast<std::uint32_t>(values[i]));
      std::memcpy(bytes.data() + 4 * i, &bits, 4);
    }
  }
  return bytes;
}

std::vector<float> floats_from_le(const char* bytes, std::size_t count) {
  std::vector<float> values(count);
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(values.data(), bytes, count * 4);
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      values[i] = std::bit_cast<float>(get_le<std::uint32_t>(bytes + 4 * i));
    }
  }
  return values;
}

std::string read_all(std::istream& in) {
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

struct IndexEntry {
  std::string name;
  Shape shape;
  std::uint64_t offset = 0;
  std::uint64_t length = 0;
};

// Validates the preamble and returns (header json, payload start).
std::pair<nlohmann::json, std::uint64_t> parse_preamble(const std::string& bytes) {
  if (bytes.size() < kMagic.size() ||
      !std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
    fail(ErrorCode::kNotABundle, "missing NADF magic");
  }
  require(bytes.size() >= kPreambleSize, ErrorCode::kTruncated, "preamble truncated");
  const auto version = get_le<std::uint32_t>(bytes.data() + 4);
  require(version == kVersion, ErrorCode::kInvalidBundle,
          "unsupported NADF version " + std::to_string(version));
  const auto json_len = get_le<std::uint64_t>(bytes.data() + 8);
  require(json_len <= bytes.size() - kPreambleSize, ErrorCode::kTruncated, "header JSON truncated");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.begin() + kPreambleSize,
                                   bytes.begin() + static_cast<std::ptrdiff_t>(kPreambleSize + json_len));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kInvalidBundle, std::string("header JSON: ") + e.what());
  }
  require(header.is_object(), ErrorCode::kInvalidBundle, "header JSON must be an object");
  return {std::move(header), align_up(kPreambleSize + json_len)};
}

std::vector<IndexEntry> parse_index(const nlohmann::json& header) {
  require(header.contains("tensors") && header["tensors"].is_object(), ErrorCode::kInvalidBundle,
          "header lacks a tensor index");
  std::vector<IndexEntry> entries;
  for (const auto& [name, info] : header["tensors"].items()) {
    try {
      const auto dtype = info.at("dtype").get<std::string>();
      if (dtype == "float16") {
        fail(ErrorCode::kUnsupportedDtype, "tensor '" + name + "' is float16; only float32 is readable");
      }
      require(dtype == "float32", ErrorCode::kInvalidBundle,
              "tensor '" + name + "' has unknown dtype '" + dtype + "'");
      IndexEntry entry;
      entry.name = name;
      entry.shape = info.at("shape").get<Shape>();
      entry.offset = info.at("byte_offset").get<std::uint64_t>();
      entry.length = info.at("byte_len").get<std::uint64_t>();
      require(!entry.shape.empty(), ErrorCode::kInvalidBundle, "tensor '" + name + "' has rank 0");
      for (auto d : entry.shape) {
        require(d >= 1, ErrorCode::kInvalidBundle, "tensor '" + name + "' has a non-positive dimension");
      }
      require(entry.length == 4 * static_cast<std::uint64_t>(shape_numel(entry.shape)),
              ErrorCode::kInvalidBundle, "tensor '" + name + "' byte_len does not match its shape");
      require(entry.offset % kAlignment == 0, ErrorCode::kInvalidBundle,
              "tensor '" + name + "' is not 64-byte aligned");
      entries.push_back(std::move(entry));
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::kInvalidBundle, "index entry '" + name + "': " + e.what());
    }
  }
  std::sort(entries.begin(), entries.end(),
            [](const IndexEntry& a, const IndexEntry& b) { return a.offset < b.offset; });
  for (std::size_t i = 1; i < entries.size(); ++i) {
    require(entries[i - 1].offset + entries[i - 1].length <= entries[i].offset &&
                entries[i - 1].offset < entries[i].offset,
            ErrorCode::kInvalidBundle,
            "tensors '" + entries[i - 1].name + "' and '" + entries[i].name + "' overlap");
  }
  return entries;
}

}  // namespace

const Tensor* Container::find(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return &t.tensor;
  }
  return nullptr;
}

std::uint64_t align_up(std::uint64_t value) noexcept {
  return (value + kAlignment - 1) / kAlignment * kAlignment;
}

std::uint64_t write_container(const Container& container, std::ostream& out) {
  require(container.header.is_object(), ErrorCode::kInvalidBundle, "header must be a JSON object");
  require(!container.header.contains("tensors"), ErrorCode::kInvalidBundle,
          "'tensors' is reserved for the index");

  nlohmann::json header = container.header;
  nlohmann::json index = nlohmann::json::object();
  std::uint64_t offset = 0;
  for (const auto& [name, tensor] : container.tensors) {
    require(!name.empty(), ErrorCode::kInvalidBundle, "tensor names must be non-empty");
    require(!index.contains(name), ErrorCode::kInvalidBundle, "duplicate tensor name '" + name + "'");
    require(tensor.rank() >= 1, ErrorCode::kInvalidBundle, "tensor '" + name + "' is empty");
    const std::uint64_t length = 4 * tensor.size();
    index[name] = {{"dtype", "float32"},
                   {"shape", tensor.shape()},
                   {"byte_offset", offset},
                   {"byte_len", length}};
    offset = align_up(offset + length);
  }
  header["tensors"] = std::move(index);
  const std::string json = header.dump();

  std::string preamble(kMagic.begin(), kMagic.end());
  put_le<std::uint32_t>(preamble, kVersion);
  put_le<std::uint64_t>(preamble, json.size());
  preamble += json;
  preamble.resize(align_up(preamble.size()), '\0');
  out.write(preamble.data(), static_cast<std::streamsize>(preamble.size()));
  std::uint64_t written = preamble.size();

  for (const auto& [name, tensor] : container.tensors) {
    std::string blob = float_bytes_le(tensor.data());
    blob.resize(align_up(blob.size()), '\0');
    out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
    written += blob.size();
  }
  require(static_cast<bool>(out), ErrorCode::kIoError, "write failed");
  return written;
}

nlohmann::json read_header(std::istream& in) {
  char preamble[kPreambleSize];
  in.read(preamble, kPreambleSize);
  const auto got = static_cast<std::size_t>(in.gcount());
  std::string bytes(preamble, got);
  if (got < kMagic.size() || !std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
    fail(ErrorCode::kNotABundle, "missing NADF magic");
  }
  require(got == kPreambleSize, ErrorCode::kTruncated, "preamble truncated");
  const auto json_len = get_le<std::uint64_t>(preamble + 8);
  std::string json(json_len, '\0');
  in.read(json.data(), static_cast<std::streamsize>(json_len));
  require(static_cast<std::uint64_t>(in.gcount()) == json_len, ErrorCode::kTruncated,
          "header JSON truncated");
  return parse_preamble(bytes + json).first;
}

Container read_container(std::istream& in, const ReadOptions& options) {
  const std::string bytes = read_all(in);
  auto [header, payload_start] = parse_preamble(bytes);
  const auto entries = parse_index(header);

  std::vector<NamedTensor> tensors;
  tensors.reserve(entries.size());
  for (const auto& entry : entries) {
    require(payload_start + entry.offset + entry.length <= bytes.size(), ErrorCode::kTruncated,
            "payload of tensor '" + entry.name + "' is truncated");
    Tensor tensor(entry.shape,
                  floats_from_le(bytes.data() + payload_start + entry.offset, entry.length / 4));
    if (!options.allow_non_finite) {
      require(tensor.all_finite(), ErrorCode::kNonFiniteData,
              "tensor '" + entry.name + "' contains NaN or Inf");
    }
    tensors.push_back({entry.name, std::move(tensor)});
  }
  header.erase("tensors");
  return Container{std::move(header), std::move(tensors)};
}

void save_container(const Container& container, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::kIoError, "cannot open " + path.string() + " for writing");
  write_container(container, out);
}

Container load_container(const std::filesystem::path& path, const ReadOptions& options) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::kIoError, "cannot open " + path.string());
  return read_container(in, options);
}

nlohmann::json peek_header(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::kIoError, "cannot open " + path.string());
  return read_header(in);
}

std::string sha256_hex(std::span<const unsigned char> bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  require(EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) == 1,
          ErrorCode::kIoError, "SHA-256 failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  hex.reserve(2 * length);
  for (unsigned int i = 0; i < length; ++i) {
    hex.push_back(kHex[digest[i] >> 4]);
    hex.push_back(kHex[digest[i] & 0xF]);
  }
  return hex;
}

std::string tensor_checksum(const Tensor& tensor) {
  const std::string bytes = float_bytes_le(tensor.data());
  return sha256_hex({reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size()});
}

std::string file_sha256(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::kIoError, "cannot open " + path.string());
  const std::string bytes = read_all(in);
  return sha256_hex({reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size()});
}

}  // namespace vitlens::nadf
