#include "vitlens/forward.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "vitlens/error.hpp"

namespace vitlens {

namespace {

using Matrix = std::vector<float>;  // row-major, dimensions carried by the caller

// out[r, :] = x[r, :] * W + b, accumulated in double.
Matrix affine(const Matrix& x, int rows, const Tensor& w, const Tensor& b) {
  const auto in = static_cast<int>(w.dim(0));
  const auto out = static_cast<int>(w.dim(1));
  Matrix y(static_cast<std::size_t>(rows) * out);
  std::vector<double> acc(static_cast<std::size_t>(out));
  for (int r = 0; r < rows; ++r) {
    for (int o = 0; o < out; ++o) acc[o] = b[o];
    for (int i = 0; i < in; ++i) {
      const double xi = x[static_cast<std::size_t>(r) * in + i];
      const float* wrow = w.ptr() + static_cast<std::size_t>(i) * out;
      for (int o = 0; o < out; ++o) acc[o] += xi * wrow[o];
    }
    for (int o = 0; o < out; ++o) y[static_cast<std::size_t>(r) * out + o] = static_cast<float>(acc[o]);
  }
  return y;
}

Matrix layer_norm(const Matrix& x, int rows, int dim, const Tensor& scale, const Tensor& shift) {
  Matrix y(x.size());
  for (int r = 0; r < rows; ++r) {
    const float* row = x.data() + static_cast<std::size_t>(r) * dim;
    double mean = 0.0;
    for (int i = 0; i < dim; ++i) mean += row[i];
    mean /= dim;
    double var = 0.0;
    for (int i = 0; i < dim; ++i) var += (row[i] - mean) * (row[i] - mean);
    var /= dim;
    const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
    for (int i = 0; i < dim; ++i) {
      y[static_cast<std::size_t>(r) * dim + i] =
          static_cast<float>((row[i] - mean) * inv * scale[i] + shift[i]);
    }
  }
  return y;
}

float gelu(float v) {
  const double x = v;
  return static_cast<float>(0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))));
}

void check_finite(const Matrix& x, const std::string& where) {
  for (float v : x) {
    require(std::isfinite(v), ErrorCode::kNumericalError, "non-finite value in " + where);
  }
}

}  // namespace

Tensor patchify(const Tensor& image, const ModelConfig& config) {
  const Shape expected{config.channels, config.image_size, config.image_size};
  require(image.shape() == expected, ErrorCode::kShapeError,
          "image shape " + shape_to_string(image.shape()) + " does not match config " +
              shape_to_string(expected));
  const int p = config.patch_size;
  const int g = config.grid();
  const int s = config.image_size;
  Tensor patches(Shape{g * g, config.patch_features()});
  for (int gy = 0; gy < g; ++gy) {
    for (int gx = 0; gx < g; ++gx) {
      float* out = patches.ptr() + static_cast<std::size_t>(gy * g + gx) * config.patch_features();
      for (int c = 0; c < config.channels; ++c) {
        for (int py = 0; py < p; ++py) {
          for (int px = 0; px < p; ++px) {
            out[(c * p + py) * p + px] =
                image.ptr()[(static_cast<std::size_t>(c) * s + gy * p + py) * s + gx * p + px];
          }
        }
      }
    }
  }
  return patches;
}

ActivationBundle forward(const Tensor& image, const Weights& weights, const ModelConfig& config,
                         const std::optional<AttentionRestriction>& restriction) {
  ForwardOptions options;
  if (restriction) options.restriction = *restriction;
  return forward(image, weights, config, options);
}

ActivationBundle forward(const Tensor& image, const Weights& weights, const ModelConfig& config,
                         const ForwardOptions& options) {
  weights.validate(config);
  require(image.all_finite(), ErrorCode::kNumericalError, "image contains non-finite pixels");
  const Tensor patches = patchify(image, config);

  const int n = config.tokens();
  const int d = config.dim;
  const int heads = config.heads;
  const int dh = config.head_dim();
  const int offset = config.use_cls ? 1 : 0;
  const Tensor mask = make_local_mask(config.grid(), config.grid(), options.restriction, config.use_cls);

  ActivationBundle bundle;
  bundle.config = config;
  if (options.restriction.kernel) {
    bundle.meta["restriction"] = {{"kernel", *options.restriction.kernel},
                                  {"include_cls_always", options.restriction.include_cls_always}};
  }
  if (options.uniform_attention_from) {
    bundle.meta["uniform_attention_from"] = *options.uniform_attention_from;
  }
  if (options.keep_input) bundle.extras[kInputImageExtra] = image;

  // Token embeddings: [CLS] + patch projections, plus positional embeddings.
  Matrix x(static_cast<std::size_t>(n) * d);
  const Matrix patch_rows(patches.data().begin(), patches.data().end());
  const Matrix embedded = affine(patch_rows, config.spatial_tokens(), weights.patch_weight, weights.patch_bias);
  for (int t = 0; t < n; ++t) {
    for (int i = 0; i < d; ++i) {
      const float base = (config.use_cls && t == 0)
                             ? weights.cls_token[i]
                             : embedded[static_cast<std::size_t>(t - offset) * d + i];
      x[static_cast<std::size_t>(t) * d + i] = base + weights.pos_embed.at(t, i);
    }
  }
  check_finite(x, "embeddings");
  bundle.representations.emplace_back(Shape{n, d}, x);

  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<double> logits(static_cast<std::size_t>(n));
  for (int l = 0; l < config.depth; ++l) {
    const auto& layer = weights.layers[l];
    const Matrix h = layer_norm(x, n, d, layer.ln1_scale, layer.ln1_shift);
    const Matrix q = affine(h, n, layer.wq, layer.bq);
    const Matrix k = affine(h, n, layer.wk, layer.bk);
    const Matrix v = affine(h, n, layer.wv, layer.bv);
    const bool uniform = options.uniform_attention_from && l >= *options.uniform_attention_from;

    Tensor attn(Shape{heads, n, n});
    Matrix concat(static_cast<std::size_t>(n) * d, 0.0f);
    std::vector<double> probs(static_cast<std::size_t>(n));
    for (int hd = 0; hd < heads; ++hd) {
      for (int qi = 0; qi < n; ++qi) {
        const float* qrow = q.data() + static_cast<std::size_t>(qi) * d + hd * dh;
        double max_logit = -std::numeric_limits<double>::infinity();
        for (int ki = 0; ki < n; ++ki) {
          double logit = 0.0;
          if (mask.at(qi, ki) == 0.0f) {
            logit = kMaskedLogit;
          } else if (!uniform) {
            const float* krow = k.data() + static_cast<std::size_t>(ki) * d + hd * dh;
            for (int j = 0; j < dh; ++j) logit += static_cast<double>(qrow[j]) * krow[j];
            logit *= scale;
          }
          logits[ki] = logit;
          max_logit = std::max(max_logit, logit);
        }
        double total = 0.0;
        for (int ki = 0; ki < n; ++ki) {
          probs[ki] = std::exp(logits[ki] - max_logit);
          total += probs[ki];
        }
        float* out = concat.data() + static_cast<std::size_t>(qi) * d + hd * dh;
        std::vector<double> acc(static_cast<std::size_t>(dh), 0.0);
        for (int ki = 0; ki < n; ++ki) {
          probs[ki] /= total;
          attn.at(hd, qi, ki) = static_cast<float>(probs[ki]);
          if (probs[ki] == 0.0) continue;
          const float* vrow = v.data() + static_cast<std::size_t>(ki) * d + hd * dh;
          for (int j = 0; j < dh; ++j) acc[j] += probs[ki] * vrow[j];
        }
        for (int j = 0; j < dh; ++j) out[j] = static_cast<float>(acc[j]);
      }
    }

    if (options.head_outputs == HeadOutputCapture::kPreProjection) {
      Tensor per_head(Shape{heads, n, dh});
      for (int hd = 0; hd < heads; ++hd) {
        for (int t = 0; t < n; ++t) {
          for (int j = 0; j < dh; ++j) {
            per_head.at(hd, t, j) = concat[static_cast<std::size_t>(t) * d + hd * dh + j];
          }
        }
      }
      bundle.extras[head_outputs_extra(l)] = std::move(per_head);
    } else if (options.head_outputs == HeadOutputCapture::kPostProjection) {
      Tensor per_head(Shape{heads, n, d});
      for (int hd = 0; hd < heads; ++hd) {
        for (int t = 0; t < n; ++t) {
          for (int o = 0; o < d; ++o) {
            double acc = 0.0;
            for (int j = 0; j < dh; ++j) {
              acc += static_cast<double>(concat[static_cast<std::size_t>(t) * d + hd * dh + j]) *
                     layer.wo.at(hd * dh + j, o);
            }
            per_head.at(hd, t, o) = static_cast<float>(acc);
          }
        }
      }
      bundle.extras[head_outputs_extra(l)] = std::move(per_head);
    }

    const Matrix projected = affine(concat, n, layer.wo, layer.bo);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += projected[i];
    check_finite(x, "attention block " + std::to_string(l));
    if (options.capture_post_attention) {
      bundle.extras[post_attention_extra(l)] = Tensor(Shape{n, d}, x);
    }

    const Matrix h2 = layer_norm(x, n, d, layer.ln2_scale, layer.ln2_shift);
    Matrix hidden = affine(h2, n, layer.w1, layer.b1);
    for (float& value : hidden) value = gelu(value);
    const Matrix mlp = affine(hidden, n, layer.w2, layer.b2);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += mlp[i];
    check_finite(x, "MLP block " + std::to_string(l));

    bundle.attention.push_back(std::move(attn));
    bundle.representations.emplace_back(Shape{n, d}, x);
  }
  return bundle;
}

}  // namespace vitlens
