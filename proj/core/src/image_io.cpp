#include "vitlens/image_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <string>

#include "vitlens/error.hpp"

namespace vitlens {
namespace {

// Next whitespace-delimited header token, skipping '#' comments.
std::string next_token(std::istream& in) {
  std::string token;
  char c;
  while (in.get(c)) {
    if (c == '#') {
      std::string ignored;
      std::getline(in, ignored);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!token.empty()) return token;
      continue;
    }
    token.push_back(c);
  }
  return token;
}

int parse_int(const std::string& token, const std::filesystem::path& path) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(token, &used);
    if (used == token.size() && v > 0) return v;
  } catch (const std::exception&) {
  }
  fail(ErrorCode::kIoError, "malformed PNM header in " + path.string());
}

}  // namespace

Tensor read_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::kIoError, "cannot open " + path.string());
  const std::string magic = next_token(in);
  require(magic == "P2" || magic == "P3" || magic == "P5" || magic == "P6", ErrorCode::kIoError,
          path.string() + " is not a PGM/PPM file");
  const int channels = (magic == "P3" || magic == "P6") ? 3 : 1;
  const bool binary = magic == "P5" || magic == "P6";
  const int width = parse_int(next_token(in), path);
  const int height = parse_int(next_token(in), path);
  const int maxval = parse_int(next_token(in), path);
  require(maxval <= 65535, ErrorCode::kIoError, "PNM maxval out of range in " + path.string());

  const std::size_t count = static_cast<std::size_t>(width) * height * channels;
  std::vector<int> samples(count);
  if (binary) {
    const std::size_t bytes = maxval < 256 ? 1 : 2;
    std::vector<unsigned char> raw(count * bytes);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    require(static_cast<std::size_t>(in.gcount()) == raw.size(), ErrorCode::kIoError,
            "truncated pixel data in " + path.string());
    for (std::size_t i = 0; i < count; ++i) {
      samples[i] = bytes == 1 ? raw[i] : (raw[2 * i] << 8) | raw[2 * i + 1];
    }
  } else {
    for (auto& s : samples) {
      const std::string tok = next_token(in);
      require(!tok.empty(), ErrorCode::kIoError, "truncated pixel data in " + path.string());
      auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), s);
      require(ec == std::errc() && ptr == tok.data() + tok.size(), ErrorCode::kIoError,
              "malformed pixel value in " + path.string());
    }
  }

  Tensor image(Shape{channels, height, width});
  const double scale = 1.0 / maxval;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      for (int c = 0; c < channels; ++c) {
        const int s = samples[(static_cast<std::size_t>(y) * width + x) * channels + c];
        image.at(c, y, x) = static_cast<float>(std::clamp(s, 0, maxval) * scale);
      }
    }
  }
  return image;
}

void write_pnm(const Tensor& image, const std::filesystem::path& path) {
  require(image.rank() == 3 && (image.dim(0) == 1 || image.dim(0) == 3), ErrorCode::kShapeError,
          "write_pnm needs a [1|3, H, W] image");
  const auto channels = image.dim(0);
  const auto height = image.dim(1);
  const auto width = image.dim(2);
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorCode::kIoError, "cannot write " + path.string());
  out << (channels == 3 ? "P6" : "P5") << '\n' << width << ' ' << height << "\n255\n";
  std::vector<unsigned char> raw;
  raw.reserve(static_cast<std::size_t>(image.size()));
  for (std::int64_t y = 0; y < height; ++y) {
    for (std::int64_t x = 0; x < width; ++x) {
      for (std::int64_t c = 0; c < channels; ++c) {
        const double v = std::clamp(static_cast<double>(image.at(c, y, x)), 0.0, 1.0);
        raw.push_back(static_cast<unsigned char>(std::lround(v * 255.0)));
      }
    }
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  require(static_cast<bool>(out), ErrorCode::kIoError, "failed writing " + path.string());
}

Tensor resize_nearest(const Tensor& image, int size) {
  require(image.rank() == 3 && size > 0, ErrorCode::kShapeError, "resize needs a [C, H, W] image");
  const auto h = image.dim(1);
  const auto w = image.dim(2);
  if (h == size && w == size) return image;
  Tensor out(Shape{image.dim(0), size, size});
  for (std::int64_t c = 0; c < image.dim(0); ++c) {
    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) {
        out.at(c, y, x) = image.at(c, y * h / size, x * w / size);
      }
    }
  }
  return out;
}

Tensor convert_channels(const Tensor& image, int channels) {
  require(image.rank() == 3, ErrorCode::kShapeError, "channel conversion needs a [C, H, W] image");
  const auto c = image.dim(0);
  if (c == channels) return image;
  const auto h = image.dim(1);
  const auto w = image.dim(2);
  Tensor out(Shape{channels, h, w});
  for (std::int64_t y = 0; y < h; ++y) {
    for (std::int64_t x = 0; x < w; ++x) {
      double mean = 0.0;
      for (std::int64_t k = 0; k < c; ++k) mean += image.at(k, y, x);
      mean /= static_cast<double>(c);
      for (int k = 0; k < channels; ++k) {
        out.at(k, y, x) = c == 1 ? image.at(0, y, x) : static_cast<float>(mean);
      }
    }
  }
  return out;
}

}  // namespace vitlens
