#include "vitlens/model.hpp"

#include <cmath>
#include <cstdlib>

#include "vitlens/error.hpp"
#include "vitlens/nadf.hpp"
#include "vitlens/rng.hpp"

namespace vitlens {

void ModelConfig::validate() const {
  auto check = [](bool ok, const std::string& what) {
    require(ok, ErrorCode::kInvalidArgument, "model config: " + what);
  };
  check(depth >= 1, "depth must be >= 1");
  check(heads >= 1, "heads must be >= 1");
  check(dim >= 1, "dim must be >= 1");
  check(dim % heads == 0, "dim must be divisible by heads");
  check(patch_size >= 1, "patch_size must be >= 1");
  check(image_size >= 1, "image_size must be >= 1");
  check(image_size % patch_size == 0, "image_size must be divisible by patch_size");
  check(channels >= 1, "channels must be >= 1");
  check(mlp_ratio > 0.0, "mlp_ratio must be positive");
  const double hidden = mlp_ratio * dim;
  check(std::abs(hidden - std::round(hidden)) < 1e-9 && std::round(hidden) >= 1.0,
        "mlp_ratio * dim must be a positive integer");
}

int ModelConfig::mlp_hidden() const { return static_cast<int>(std::lround(mlp_ratio * dim)); }

void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = nlohmann::json{{"depth", c.depth},         {"heads", c.heads},
                     {"dim", c.dim},             {"patch_size", c.patch_size},
                     {"image_size", c.image_size}, {"channels", c.channels},
                     {"mlp_ratio", c.mlp_ratio}, {"use_cls", c.use_cls}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
  c.depth = j.at("depth").get<int>();
  c.heads = j.at("heads").get<int>();
  c.dim = j.at("dim").get<int>();
  c.patch_size = j.at("patch_size").get<int>();
  c.image_size = j.at("image_size").get<int>();
  c.channels = j.value("channels", 3);
  c.mlp_ratio = j.value("mlp_ratio", 4.0);
  c.use_cls = j.value("use_cls", false);
}

namespace {

void expect_shape(const Tensor& t, const Shape& shape, const std::string& name) {
  require(t.shape() == shape, ErrorCode::kShapeError,
          "weight '" + name + "' has shape " + shape_to_string(t.shape()) + ", expected " +
              shape_to_string(shape));
}

// Parameter list in a fixed order; used for sampling and serialization.
template <typename W, typename F>
void for_each_parameter(W& weights, const ModelConfig& config, F&& visit) {
  const std::int64_t d = config.dim;
  const std::int64_t hidden = config.mlp_hidden();
  visit(weights.patch_weight, Shape{config.patch_features(), d}, "patch_embed/weight", true);
  visit(weights.patch_bias, Shape{d}, "patch_embed/bias", true);
  if (config.use_cls) visit(weights.cls_token, Shape{d}, "cls_token", true);
  visit(weights.pos_embed, Shape{config.tokens(), d}, "pos_embed", true);
  for (std::size_t l = 0; l < weights.layers.size(); ++l) {
    auto& layer = weights.layers[l];
    const std::string p = "blocks/" + std::to_string(l) + "/";
    visit(layer.ln1_scale, Shape{d}, p + "ln1/scale", false);
    visit(layer.ln1_shift, Shape{d}, p + "ln1/shift", false);
    visit(layer.wq, Shape{d, d}, p + "attn/wq", true);
    visit(layer.bq, Shape{d}, p + "attn/bq", true);
    visit(layer.wk, Shape{d, d}, p + "attn/wk", true);
    visit(layer.bk, Shape{d}, p + "attn/bk", true);
    visit(layer.wv, Shape{d, d}, p + "attn/wv", true);
    visit(layer.bv, Shape{d}, p + "attn/bv", true);
    visit(layer.wo, Shape{d, d}, p + "attn/wo", true);
    visit(layer.bo, Shape{d}, p + "attn/bo", true);
    visit(layer.ln2_scale, Shape{d}, p + "ln2/scale", false);
    visit(layer.ln2_shift, Shape{d}, p + "ln2/shift", false);
    visit(layer.w1, Shape{d, hidden}, p + "mlp/w1", true);
    visit(layer.b1, Shape{hidden}, p + "mlp/b1", true);
    visit(layer.w2, Shape{hidden, d}, p + "mlp/w2", true);
    visit(layer.b2, Shape{d}, p + "mlp/b2", true);
  }
}

constexpr const char* kWeightsKind = "weights";
constexpr const char* kWeightsPrefix = "weights/";

}  // namespace

void Weights::validate(const ModelConfig& config) const {
  config.validate();
  require(static_cast<int>(layers.size()) == config.depth, ErrorCode::kShapeError,
          "weights have " + std::to_string(layers.size()) + " layers, config depth is " +
              std::to_string(config.depth));
  for_each_parameter(*this, config,
                     [](const Tensor& t, const Shape& shape, const std::string& name, bool) {
                       expect_shape(t, shape, name);
                     });
  if (head) {
    require(head->weight.rank() == 2 && head->weight.dim(0) == config.dim, ErrorCode::kShapeError,
            "classifier weight must be [dim, num_classes]");
    expect_shape(head->bias, Shape{head->weight.dim(1)}, "head/bias");
  }
}

Weights random_weights(const ModelConfig& config, std::uint64_t seed, double init_std) {
  config.validate();
  Weights w;
  w.layers.resize(static_cast<std::size_t>(config.depth));
  Rng rng(seed);
  for_each_parameter(w, config, [&](Tensor& t, const Shape& shape, const std::string& name, bool random) {
    const bool is_scale = name.ends_with("/scale");
    t = Tensor(shape, is_scale ? 1.0f : 0.0f);
    if (random) {
      for (float& v : t.data()) v = static_cast<float>(rng.truncated_normal(init_std));
    }
  });
  return w;
}

Tensor make_local_mask(int grid_h, int grid_w, const AttentionRestriction& restriction, bool has_cls) {
  require(grid_h >= 1 && grid_w >= 1, ErrorCode::kShapeError, "grid must be at least 1x1");
  if (restriction.kernel) {
    const int k = *restriction.kernel;
    require(k >= 1 && k % 2 == 1, ErrorCode::kInvalidKernel,
            "attention kernel must be a positive odd integer, got " + std::to_string(k));
  }
  const int offset = has_cls ? 1 : 0;
  const int n = grid_h * grid_w + offset;
  Tensor mask(Shape{n, n}, 0.0f);
  const int radius = restriction.kernel ? (*restriction.kernel - 1) / 2 : -1;
  for (int q = 0; q < grid_h * grid_w; ++q) {
    for (int k = 0; k < grid_h * grid_w; ++k) {
      const int dy = std::abs(q / grid_w - k / grid_w);
      const int dx = std::abs(q % grid_w - k % grid_w);
      const bool admitted = radius < 0 || std::max(dx, dy) <= radius;
      mask.at(q + offset, k + offset) = admitted ? 1.0f : 0.0f;
    }
  }
  if (has_cls) {
    const bool global = !restriction.restricted() || restriction.include_cls_always;
    for (int i = 0; i < n; ++i) {
      mask.at(0, i) = (global || i == 0) ? 1.0f : 0.0f;
      mask.at(i, 0) = (global || i == 0) ? 1.0f : 0.0f;
    }
  }
  return mask;
}

void save_weights(const Weights& weights, const ModelConfig& config, const std::filesystem::path& path) {
  weights.validate(config);
  nadf::Container c;
  c.header["kind"] = kWeightsKind;
  c.header["config"] = config;
  for_each_parameter(weights, config, [&](const Tensor& t, const Shape&, const std::string& name, bool) {
    c.tensors.push_back({kWeightsPrefix + name, t});
  });
  if (weights.head) {
    c.tensors.push_back({std::string(kWeightsPrefix) + "head/weight", weights.head->weight});
    c.tensors.push_back({std::string(kWeightsPrefix) + "head/bias", weights.head->bias});
  }
  nadf::save_container(c, path);
}

std::pair<ModelConfig, Weights> load_weights(const std::filesystem::path& path) {
  auto c = nadf::load_container(path);
  require(c.header.value("kind", std::string()) == kWeightsKind, ErrorCode::kInvalidBundle,
          path.string() + " is not a weights container");
  ModelConfig config;
  try {
    config = c.header.at("config").get<ModelConfig>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kInvalidBundle, std::string("config: ") + e.what());
  }
  config.validate();
  Weights w;
  w.layers.resize(static_cast<std::size_t>(config.depth));
  auto get = [&](const std::string& name) {
    const Tensor* t = c.find(kWeightsPrefix + name);
    require(t != nullptr, ErrorCode::kInvalidBundle, "missing weight '" + name + "'");
    return *t;
  };
  for_each_parameter(w, config, [&](Tensor& t, const Shape&, const std::string& name, bool) {
    t = get(name);
  });
  if (c.find(std::string(kWeightsPrefix) + "head/weight")) {
    w.head = ClassifierHead{get("head/weight"), get("head/bias")};
  }
  w.validate(config);
  return {config, std::move(w)};
}

}  // namespace vitlens
