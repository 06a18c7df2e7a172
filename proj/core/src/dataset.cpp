#include "vitlens/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>

#include "vitlens/error.hpp"
#include "vitlens/nadf.hpp"
#include "vitlens/rng.hpp"

namespace vitlens {

LabeledImages synthetic_images(const ModelConfig& config, int count, const SyntheticOptions& options) {
  config.validate();
  require(count >= 1, ErrorCode::kInvalidArgument, "synthetic image count must be >= 1");
  require(options.classes >= 2, ErrorCode::kInvalidArgument, "synthetic data needs at least two classes");
  require(options.texture_std >= 0.0, ErrorCode::kInvalidArgument, "texture std must be non-negative");

  const int s = config.image_size;
  LabeledImages out;
  for (int i = 0; i < count; ++i) {
    const int label = i % options.classes;
    const double t = 2.0 * label / (options.classes - 1) - 1.0;
    Rng rng(mix_seed(options.seed, static_cast<std::uint64_t>(i)));
    Tensor image(Shape{config.channels, s, s});
    for (int c = 0; c < config.channels; ++c) {
      // Alternate the direction per channel so classes differ in colour, not only brightness.
      const double level = 0.5 + options.offset * (c % 2 == 0 ? t : -t);
      for (int y = 0; y < s; ++y) {
        for (int x = 0; x < s; ++x) {
          image.at(c, y, x) = static_cast<float>(level + options.texture_std * rng.normal());
        }
      }
    }
    out.images.push_back(std::move(image));
    out.labels.push_back(label);
    char name[32];
    std::snprintf(name, sizeof name, "synthetic_%05d", i);
    out.names.emplace_back(name);
  }
  return out;
}

namespace {

std::vector<std::filesystem::path> sorted_files(const std::filesystem::path& dir,
                                                std::initializer_list<std::string_view> extensions) {
  require(std::filesystem::is_directory(dir), ErrorCode::kIoError, dir.string() + " is not a directory");
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    auto ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (std::find(extensions.begin(), extensions.end(), ext) != extensions.end()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace

std::vector<std::filesystem::path> list_bundles(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> out;
  for (const auto& path : sorted_files(dir, {".nad"})) {
    if (nadf::peek_header(path).value("kind", "") == "activations") out.push_back(path);
  }
  return out;
}

std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir) {
  return sorted_files(dir, {".pgm", ".ppm", ".pnm"});
}

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string::npos) return {};
  return s.substr(first, s.find_last_not_of(" \t") - first + 1);
}

}  // namespace

std::map<std::string, int> read_labels_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::kIoError, "cannot open " + path.string());
  std::map<std::string, int> labels;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    require(comma != std::string::npos, ErrorCode::kInvalidArgument,
            path.string() + ":" + std::to_string(line_no) + ": expected name,label");
    const std::string name = trim(line.substr(0, comma));
    const std::string field = trim(line.substr(comma + 1));
    int label = 0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), label);
    if (ec != std::errc() || ptr != field.data() + field.size()) {
      require(line_no == 1, ErrorCode::kInvalidArgument,
              path.string() + ":" + std::to_string(line_no) + ": label is not an integer");
      continue;
    }
    require(label >= 0, ErrorCode::kInvalidArgument, "negative label for " + name);
    labels[std::filesystem::path(name).stem().string()] = label;
  }
  return labels;
}

}  // namespace vitlens
