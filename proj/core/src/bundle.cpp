#include "vitlens/bundle.hpp"

#include <cmath>
#include <fstream>

#include "vitlens/error.hpp"

namespace vitlens {

namespace {

constexpr const char* kKind = "activations";

std::string attention_name(int layer) { return "attention/" + std::to_string(layer); }
std::string representation_name(int depth) { return "representations/" + std::to_string(depth); }

void check_attention(const Tensor& attn, int layer, const ModelConfig& config,
                     const BundleValidation& options) {
  const std::string where = "attention/" + std::to_string(layer);
  const Shape expected{config.heads, config.tokens(), config.tokens()};
  require(attn.shape() == expected, ErrorCode::kInvalidBundle,
          where + " has shape " + shape_to_string(attn.shape()) + ", expected " +
              shape_to_string(expected));
  const auto n = static_cast<std::size_t>(config.tokens());
  const auto data = attn.data();
  for (std::size_t row = 0; row < data.size() / n; ++row) {
    double sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const float p = data[row * n + k];
      if (!std::isfinite(p)) {
        require(options.allow_non_finite, ErrorCode::kNonFiniteData, where + " contains NaN or Inf");
        continue;
      }
      require(p >= 0.0f && p <= 1.0f, ErrorCode::kInvalidBundle,
              where + " has an entry outside [0, 1]");
      sum += p;
    }
    if (!options.allow_non_finite || std::isfinite(sum)) {
      require(std::abs(sum - 1.0) <= options.row_sum_tolerance, ErrorCode::kInvalidBundle,
              where + " row " + std::to_string(row) + " sums to " + std::to_string(sum));
    }
  }
}

}  // namespace

std::string head_outputs_extra(int layer) { return "head_outputs/" + std::to_string(layer); }
std::string post_attention_extra(int layer) { return "post_attention/" + std::to_string(layer); }

void validate_bundle(const ActivationBundle& bundle, const BundleValidation& options) {
  try {
    bundle.config.validate();
  } catch (const Error& e) {
    fail(ErrorCode::kInvalidBundle, e.what());
  }
  const auto& config = bundle.config;
  require(static_cast<int>(bundle.attention.size()) == config.depth, ErrorCode::kInvalidBundle,
          "expected " + std::to_string(config.depth) + " attention tensors, got " +
              std::to_string(bundle.attention.size()));
  require(static_cast<int>(bundle.representations.size()) == config.depth + 1,
          ErrorCode::kInvalidBundle,
          "expected " + std::to_string(config.depth + 1) + " representation tensors, got " +
              std::to_string(bundle.representations.size()));
  for (int l = 0; l < config.depth; ++l) check_attention(bundle.attention[l], l, config, options);

  const Shape repr_shape{config.tokens(), config.dim};
  for (std::size_t d = 0; d < bundle.representations.size(); ++d) {
    const auto& r = bundle.representations[d];
    require(r.shape() == repr_shape, ErrorCode::kInvalidBundle,
            "representations/" + std::to_string(d) + " has shape " + shape_to_string(r.shape()) +
                ", expected " + shape_to_string(repr_shape));
    require(options.allow_non_finite || r.all_finite(), ErrorCode::kNonFiniteData,
            "representations/" + std::to_string(d) + " contains NaN or Inf");
  }
  for (const auto& [name, t] : bundle.extras) {
    require(t.rank() >= 1, ErrorCode::kInvalidBundle, "extra '" + name + "' is empty");
    require(options.allow_non_finite || t.all_finite(), ErrorCode::kNonFiniteData,
            "extra '" + name + "' contains NaN or Inf");
  }
  require(bundle.meta.is_object(), ErrorCode::kInvalidBundle, "meta must be a JSON object");
}

nadf::Container to_container(const ActivationBundle& bundle) {
  nadf::Container c;
  c.header["kind"] = kKind;
  c.header["config"] = bundle.config;
  c.header["meta"] = bundle.meta;
  for (int l = 0; l < static_cast<int>(bundle.attention.size()); ++l) {
    c.tensors.push_back({attention_name(l), bundle.attention[l]});
  }
  for (int d = 0; d < static_cast<int>(bundle.representations.size()); ++d) {
    c.tensors.push_back({representation_name(d), bundle.representations[d]});
  }
  for (const auto& [name, t] : bundle.extras) {
    require(!name.starts_with("attention/") && !name.starts_with("representations/"),
            ErrorCode::kInvalidBundle, "extra name '" + name + "' collides with a reserved prefix");
    c.tensors.push_back({name, t});
  }
  return c;
}

ActivationBundle from_container(nadf::Container container, const BundleValidation& options) {
  const auto& header = container.header;
  require(header.value("kind", std::string()) == kKind, ErrorCode::kInvalidBundle,
          "container kind is not '" + std::string(kKind) + "'");
  ActivationBundle bundle;
  try {
    bundle.config = header.at("config").get<ModelConfig>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kInvalidBundle, std::string("config: ") + e.what());
  }
  if (header.contains("meta")) bundle.meta = header["meta"];

  std::map<std::string, Tensor> named;
  for (auto& t : container.tensors) named.emplace(std::move(t.name), std::move(t.tensor));

  auto take = [&](const std::string& name) {
    auto it = named.find(name);
    require(it != named.end(), ErrorCode::kInvalidBundle, "missing tensor '" + name + "'");
    Tensor t = std::move(it->second);
    named.erase(it);
    return t;
  };
  require(bundle.config.depth >= 1, ErrorCode::kInvalidBundle, "depth must be >= 1");
  for (int l = 0; l < bundle.config.depth; ++l) bundle.attention.push_back(take(attention_name(l)));
  for (int d = 0; d <= bundle.config.depth; ++d) {
    bundle.representations.push_back(take(representation_name(d)));
  }
  for (auto& [name, t] : named) {
    require(!name.starts_with("attention/") && !name.starts_with("representations/"),
            ErrorCode::kInvalidBundle, "unexpected tensor '" + name + "'");
  }
  bundle.extras = std::move(named);
  validate_bundle(bundle, options);
  return bundle;
}

std::uint64_t write_bundle(const ActivationBundle& bundle, std::ostream& out) {
  validate_bundle(bundle);
  return nadf::write_container(to_container(bundle), out);
}

ActivationBundle read_bundle(std::istream& in, const BundleValidation& options) {
  return from_container(nadf::read_container(in, {.allow_non_finite = options.allow_non_finite}),
                        options);
}

void save_bundle(const ActivationBundle& bundle, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::kIoError, "cannot open " + path.string() + " for writing");
  write_bundle(bundle, out);
}

ActivationBundle load_bundle(const std::filesystem::path& path, const BundleValidation& options) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::kIoError, "cannot open " + path.string());
  return read_bundle(in, options);
}

bool bit_equal(const ActivationBundle& a, const ActivationBundle& b) {
  auto all_equal = [](const std::vector<Tensor>& x, const std::vector<Tensor>& y) {
    if (x.size() != y.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (!bit_equal(x[i], y[i])) return false;
    }
    return true;
  };
  if (!(a.config == b.config) || a.meta != b.meta || a.extras.size() != b.extras.size()) return false;
  if (!all_equal(a.attention, b.attention) || !all_equal(a.representations, b.representations)) {
    return false;
  }
  for (const auto& [name, t] : a.extras) {
    auto it = b.extras.find(name);
    if (it == b.extras.end() || !bit_equal(t, it->second)) return false;
  }
  return true;
}

}  // namespace vitlens
