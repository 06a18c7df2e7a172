#include "commands.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "support.hpp"
#include "vitlens/attention_metrics.hpp"
#include "vitlens/dataset.hpp"
#include "vitlens/forward.hpp"
#include "vitlens/image_io.hpp"
#include "vitlens/nadf.hpp"
#include "vitlens/objectives.hpp"
#include "vitlens/parallel.hpp"
#include "vitlens/probe.hpp"
#include "vitlens/representation_metrics.hpp"
#include "vitlens/robustness.hpp"
#include "vitlens/spectral.hpp"

namespace vitlens::cli {
namespace {

namespace fs = std::filesystem;

ModelConfig default_config() {
  ModelConfig c;
  c.depth = 4;
  c.heads = 4;
  c.dim = 32;
  c.patch_size = 4;
  c.image_size = 32;
  c.channels = 3;
  return c;
}

fs::path manifest_path(const std::string& override_path, const fs::path& out) {
  if (!override_path.empty()) return override_path;
  fs::path p = out;
  return p.replace_extension(".manifest.json");
}

Pooling parse_pooling(const std::string& s) { return s == "cls" ? Pooling::kCls : Pooling::kMeanTokens; }

// Where the model comes from: a saved weights file, or a config plus seed.
struct ModelSource {
  std::string config_path;
  std::string weights_path;
  std::uint64_t weights_seed = 0;
  double init_std = 0.02;

  void add_to(CLI::App* sub) {
    auto* config = sub->add_option("--config", config_path, "Model config JSON (depth, heads, dim, patch_size, "
                                                            "image_size, channels, mlp_ratio, use_cls)")
                       ->check(CLI::ExistingFile);
    sub->add_option("--weights", weights_path, "Weights file written by dump --save-weights")
        ->check(CLI::ExistingFile)
        ->excludes(config);
    sub->add_option("--weights-seed", weights_seed, "Seed for random weights")->capture_default_str();
    sub->add_option("--init-std", init_std, "Std of the truncated-normal weight init")->capture_default_str();
  }

  std::pair<ModelConfig, Weights> resolve(Manifest& m) const {
    if (!weights_path.empty()) {
      m.inputs.emplace_back(weights_path);
      return load_weights(weights_path);
    }
    ModelConfig config = default_config();
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      config = nlohmann::json::parse(in).get<ModelConfig>();
      m.inputs.emplace_back(config_path);
    }
    config.validate();
    m.seeds["weights"] = weights_seed;
    return {config, random_weights(config, weights_seed, init_std)};
  }
};

// Images from a PGM/PPM directory or a synthetic class-conditional set.
struct ImageSource {
  std::string images_dir;
  std::string labels_path;
  int synthetic = 0;
  SyntheticOptions synth;

  void add_to(CLI::App* sub) {
    auto* images = sub->add_option("--images", images_dir, "Directory of PGM/PPM images")->check(CLI::ExistingDirectory);
    sub->add_option("--synthetic", synthetic, "Generate N synthetic images instead of reading --images")
        ->check(CLI::PositiveNumber)
        ->excludes(images);
    sub->add_option("--labels", labels_path, "labels.csv for --images (default: <images>/labels.csv if present)")
        ->check(CLI::ExistingFile);
    sub->add_option("--synthetic-seed", synth.seed, "Seed of the synthetic images")->capture_default_str();
    sub->add_option("--classes", synth.classes, "Synthetic classes")->capture_default_str();
    sub->add_option("--offset", synth.offset, "Synthetic per-class brightness spread")->capture_default_str();
    sub->add_option("--texture-std", synth.texture_std, "Synthetic per-pixel texture std")->capture_default_str();
  }

  // Unreadable images are skipped with a warning. Labels stay empty when
  // none are known.
  LabeledImages load(const ModelConfig& config, Manifest& m) const {
    if (synthetic > 0) {
      m.seeds["synthetic"] = synth.seed;
      return synthetic_images(config, synthetic, synth);
    }
    require(!images_dir.empty(), ErrorCode::kInvalidArgument, "one of --images or --synthetic is required");
    fs::path labels_file = labels_path;
    if (labels_file.empty() && fs::exists(fs::path(images_dir) / "labels.csv")) labels_file = fs::path(images_dir) / "labels.csv";
    std::map<std::string, int> table;
    if (!labels_file.empty()) {
      table = read_labels_csv(labels_file);
      m.inputs.push_back(labels_file);
    }
    LabeledImages out;
    for (const auto& path : list_images(images_dir)) {
      try {
        Tensor img = convert_channels(read_pnm(path), config.channels);
        if (img.dim(1) != config.image_size || img.dim(2) != config.image_size) img = resize_nearest(img, config.image_size);
        const std::string name = path.stem().string();
        if (!table.empty()) {
          const auto it = table.find(name);
          require(it != table.end(), ErrorCode::kInvalidArgument, "no label for " + name);
          out.labels.push_back(it->second);
        }
        out.images.push_back(std::move(img));
        out.names.push_back(name);
        m.inputs.push_back(path);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kIoError) throw;
        std::fprintf(stderr, "warning: skipping %s: %s\n", path.string().c_str(), e.what());
      }
    }
    return out;
  }
};

struct ManifestOption {
  std::string path;
  void add_to(CLI::App* sub) {
    sub->add_option("--manifest", path, "Manifest path (default: next to the output)");
  }
};

// ---------------------------------------------------------------- dump

struct DumpOptions {
  ModelSource model;
  ImageSource images;
  ManifestOption manifest;
  std::optional<int> kernel;
  bool cls_local = false;
  std::optional<int> uniform_from;
  std::string head_outputs = "pre";
  bool save_weights = false;
  std::string out;
};

void run_dump(const DumpOptions& o, const std::vector<std::string>& args) {
  Manifest m{"dump", args};
  const auto [config, weights] = o.model.resolve(m);
  ForwardOptions fo;
  if (o.kernel) {
    fo.restriction = AttentionRestriction::local(*o.kernel, !o.cls_local);
    make_local_mask(config.grid(), config.grid(), fo.restriction, config.use_cls);
  }
  fo.uniform_attention_from = o.uniform_from;
  fo.head_outputs = o.head_outputs == "none"  ? HeadOutputCapture::kNone
                    : o.head_outputs == "post" ? HeadOutputCapture::kPostProjection
                                               : HeadOutputCapture::kPreProjection;
  const auto data = o.images.load(config, m);
  require(data.size() > 0, ErrorCode::kEmptyRun, "no images to dump");

  std::vector<ActivationBundle> bundles(data.size());
  parallel_for(data.size(), [&](std::size_t i) {
    bundles[i] = forward(data.images[i], weights, config, fo);
    bundles[i].meta["image"] = data.names[i];
  });
  const fs::path out = o.out;
  fs::create_directories(out);
  for (std::size_t i = 0; i < bundles.size(); ++i) {
    const auto path = out / (data.names[i] + ".nad");
    save_bundle(bundles[i], path);
    m.outputs.push_back(path);
  }
  if (!data.labels.empty()) {
    std::string csv = "name,label\n";
    for (std::size_t i = 0; i < data.size(); ++i) csv += data.names[i] + "," + std::to_string(data.labels[i]) + "\n";
    write_text(out / "labels.csv", csv);
    m.outputs.push_back(out / "labels.csv");
  }
  if (o.save_weights) {
    vitlens::save_weights(weights, config, out / "weights.nad");
    m.outputs.push_back(out / "weights.nad");
  }
  m.write(o.manifest.path.empty() ? out / "manifest.json" : fs::path(o.manifest.path));
  std::printf("wrote %zu bundles to %s\n", bundles.size(), out.string().c_str());
}

// ----------------------------------------------------------- attn-stats

struct AttnOptions {
  std::string in, out, json, svg, svg_nmi;
  double patch_px = -1.0;
  bool nmi_exclude_cls = false;
  ManifestOption manifest;
};

void run_attn_stats(const AttnOptions& o, const std::vector<std::string>& args) {
  Manifest m{"attn-stats", args};
  std::vector<fs::path> paths;
  const auto bundles = load_dataset(o.in, &paths);
  m.inputs = paths;
  AttentionStatsOptions so;
  so.patch_px = o.patch_px;
  so.nmi_exclude_cls = o.nmi_exclude_cls;
  std::vector<AttentionStats> per(bundles.size());
  parallel_for(bundles.size(), [&](std::size_t i) { per[i] = attention_stats(bundles[i], so); });
  AttentionStatsAccumulator acc;
  for (const auto& s : per) acc.add(s);
  const auto stats = acc.mean();

  const auto layers = stats.distance.size();
  Csv csv({"layer", "head", "metric", "value"});
  for (std::size_t l = 0; l < layers; ++l) {
    for (std::size_t h = 0; h < stats.distance[l].size(); ++h)
      csv.row({std::to_string(l), std::to_string(h), "distance", format_number(stats.distance[l][h])});
    for (std::size_t h = 0; h < stats.nmi[l].size(); ++h)
      csv.row({std::to_string(l), std::to_string(h), "nmi", format_number(stats.nmi[l][h])});
    csv.row({std::to_string(l), "all", "nmi_head_std", format_number(stats.nmi_std[l])});
  }
  csv.save(o.out);
  m.outputs.emplace_back(o.out);

  if (!o.json.empty()) {
    nlohmann::json j;
    j["bundles"] = bundles.size();
    j["distance"] = stats.distance;
    j["nmi"] = stats.nmi;
    j["nmi_mean"] = stats.nmi_mean;
    j["nmi_std"] = stats.nmi_std;
    write_text(o.json, j.dump(2) + "\n");
    m.outputs.emplace_back(o.json);
  }
  auto per_head = [&](const std::vector<std::vector<double>>& values) {
    std::vector<Series> series;
    for (std::size_t h = 0; h < values[0].size(); ++h) {
      Series s{"head " + std::to_string(h), {}, {}};
      for (std::size_t l = 0; l < layers; ++l) {
        s.x.push_back(static_cast<double>(l));
        s.y.push_back(values[l][h]);
      }
      series.push_back(std::move(s));
    }
    return series;
  };
  if (!o.svg.empty()) {
    write_svg(o.svg, "Attention distance", "layer", "distance (px)", per_head(stats.distance));
    m.outputs.emplace_back(o.svg);
  }
  if (!o.svg_nmi.empty()) {
    write_svg(o.svg_nmi, "Attention NMI", "layer", "NMI", per_head(stats.nmi));
    m.outputs.emplace_back(o.svg_nmi);
  }
  m.write(manifest_path(o.manifest.path, o.out));
}

// ----------------------------------------------------------- repr-stats

struct ReprOptions {
  std::string in, out, svg;
  ManifestOption manifest;
};

void run_repr_stats(const ReprOptions& o, const std::vector<std::string>& args) {
  Manifest m{"repr-stats", args};
  std::vector<fs::path> paths;
  const auto bundles = load_dataset(o.in, &paths);
  m.inputs = paths;
  const auto& config = bundles[0].config;
  const int layers = config.depth;
  const char* names[] = {"cos_heads", "cos_depth", "cos_tokens"};
  using Row = std::array<std::optional<double>, 3>;
  std::vector<std::vector<Row>> per(bundles.size(), std::vector<Row>(layers));
  parallel_for(bundles.size(), [&](std::size_t i) {
    const auto& b = bundles[i];
    for (int l = 0; l < layers; ++l) {
      const auto heads = b.extras.find(head_outputs_extra(l));
      if (heads != b.extras.end() && config.heads >= 2) per[i][l][0] = cosine_similarity_heads(heads->second);
      const auto post = b.extras.find(post_attention_extra(l));
      if (post != b.extras.end()) per[i][l][1] = cosine_similarity_depth(b.representations[l], post->second);
      per[i][l][2] = cosine_similarity_tokens(b.representations[l + 1], config.use_cls);
    }
  });

  Csv csv({"layer", "metric", "value"});
  std::vector<Series> series;
  for (int k = 0; k < 3; ++k) {
    bool everywhere = true;
    for (const auto& rows : per)
      for (const auto& r : rows) everywhere = everywhere && r[k].has_value();
    if (!everywhere) continue;
    Series s{names[k], {}, {}};
    for (int l = 0; l < layers; ++l) {
      double sum = 0;
      for (const auto& rows : per) sum += *rows[l][k];
      s.x.push_back(l);
      s.y.push_back(sum / static_cast<double>(per.size()));
    }
    series.push_back(std::move(s));
  }
  for (int l = 0; l < layers; ++l)
    for (const auto& s : series) csv.row({std::to_string(l), s.name, format_number(s.y[l])});
  csv.save(o.out);
  m.outputs.emplace_back(o.out);
  if (!o.svg.empty()) {
    write_svg(o.svg, "Cosine similarity", "layer", "cosine", series);
    m.outputs.emplace_back(o.svg);
  }
  m.write(manifest_path(o.manifest.path, o.out));
}

// -------------------------------------------------------------- fourier

struct FourierCmdOptions {
  std::string in, out, svg;
  FourierOptions fourier;
  ManifestOption manifest;
};

void run_fourier(const FourierCmdOptions& o, const std::vector<std::string>& args) {
  Manifest m{"fourier", args};
  std::vector<fs::path> paths;
  const auto bundles = load_dataset(o.in, &paths);
  m.inputs = paths;
  const auto& config = bundles[0].config;
  std::vector<AmplitudeSpectrum> spectra(config.depth);
  parallel_for(spectra.size(), [&](std::size_t l) {
    AmplitudeAccumulator acc(o.fourier);
    for (const auto& b : bundles) acc.add(b.representations[l + 1], b.grid_h(), b.grid_w(), config.use_cls);
    spectra[l] = acc.result(static_cast<int>(l) + 1);
  });

  Csv csv({"layer", "freq_bin", "log_amplitude", "delta"});
  std::vector<Series> series;
  for (const auto& s : spectra) {
    Series line{"layer " + std::to_string(s.layer), {}, {}};
    for (const auto& bin : s.bins) {
      const double delta = bin.mean_log_amplitude - s.bins.front().mean_log_amplitude;
      csv.row({std::to_string(s.layer), format_number(bin.frequency), format_number(bin.mean_log_amplitude),
               format_number(delta)});
      line.x.push_back(bin.frequency);
      line.y.push_back(delta);
    }
    series.push_back(std::move(line));
  }
  csv.save(o.out);
  m.outputs.emplace_back(o.out);
  if (!o.svg.empty()) {
    write_svg(o.svg, "Relative log amplitude", "frequency (x pi)", "delta log amplitude", series);
    m.outputs.emplace_back(o.svg);
  }
  m.write(manifest_path(o.manifest.path, o.out));
}

// ------------------------------------------------------------------ svd

struct SvdOptions {
  std::string in, out, svg;
  std::string level = "token";
  std::string reference = "second";
  bool no_center = false;
  ManifestOption manifest;
};

void run_svd(const SvdOptions& o, const std::vector<std::string>& args) {
  Manifest m{"svd", args};
  std::vector<fs::path> paths;
  const auto bundles = load_dataset(o.in, &paths);
  m.inputs = paths;
  const auto& config = bundles[0].config;
  SpectrumOptions so;
  so.reference = o.reference == "largest" ? SpectrumReference::kLargest : SpectrumReference::kSecondLargest;
  so.centered = !o.no_center;
  const bool token = o.level == "token";

  std::vector<SpectrumResult> spectra(config.depth + 1);
  if (token) {
    parallel_for(spectra.size(), [&](std::size_t d) {
      SpectrumAccumulator acc;
      for (const auto& b : bundles) acc.add(token_spectrum(b.representations[d], config.use_cls, so));
      spectra[d] = acc.result(so.reference, SpectrumLevel::kToken, static_cast<int>(d));
    });
  } else {
    PooledFeatures pooled(Pooling::kMeanTokens);
    for (const auto& b : bundles) pooled.add(b);
    const auto matrices = pooled.matrices();
    parallel_for(spectra.size(), [&](std::size_t d) {
      spectra[d] = image_spectrum(matrices[d], so);
      spectra[d].layer = static_cast<int>(d);
    });
  }

  Csv csv({"layer", "index", "sigma", "delta_log", "level"});
  std::vector<Series> series;
  for (const auto& s : spectra) {
    Series line{"depth " + std::to_string(s.layer), {}, {}};
    for (std::size_t i = 0; i < s.singular_values.size(); ++i) {
      csv.row({std::to_string(s.layer), std::to_string(i), format_number(s.singular_values[i]),
               format_number(s.delta_log[i]), to_string(s.level)});
      line.x.push_back(static_cast<double>(i));
      line.y.push_back(s.delta_log[i]);
    }
    series.push_back(std::move(line));
  }
  csv.save(o.out);
  m.outputs.emplace_back(o.out);
  if (!o.svg.empty()) {
    write_svg(o.svg, std::string("Singular value spectrum (") + o.level + ")", "index", "delta log sigma", series);
    m.outputs.emplace_back(o.svg);
  }
  m.write(manifest_path(o.manifest.path, o.out));
}

// ---------------------------------------------------------------- noise

struct NoiseOptions {
  ModelSource model;
  ImageSource images;
  ManifestOption manifest;
  RobustnessOptions robustness;
  std::optional<int> kernel;
  std::string pooling = "mean";
  double window = 0.1;
  ProbeConfig probe;
  std::string out, svg;
};

void run_noise(NoiseOptions o, const std::vector<std::string>& args) {
  Manifest m{"noise", args};
  const auto [config, weights] = o.model.resolve(m);
  const auto data = o.images.load(config, m);
  require(data.size() > 0, ErrorCode::kEmptyRun, "no images to evaluate");
  require(data.labels.size() == data.size(), ErrorCode::kInvalidArgument, "noise needs labels for every image");
  if (o.kernel) o.robustness.restriction = AttentionRestriction::local(*o.kernel);
  o.robustness.pooling = parse_pooling(o.pooling);
  m.seeds["noise"] = o.robustness.seed;

  std::optional<ClassifierHead> head = weights.head;
  if (!head) {
    // Desk-scale stand-in for a trained classifier: a probe on clean final features.
    ForwardOptions fo;
    fo.restriction = o.robustness.restriction;
    fo.head_outputs = HeadOutputCapture::kNone;
    fo.capture_post_attention = false;
    fo.keep_input = false;
    DMatrix features(data.size(), static_cast<std::size_t>(config.dim));
    parallel_for(data.size(), [&](std::size_t i) {
      const auto b = forward(data.images[i], weights, config, fo);
      const auto pooled = pool(b.representations.back(), o.robustness.pooling, config.use_cls);
      for (int j = 0; j < config.dim; ++j) features(i, j) = pooled[j];
    });
    o.probe.pooling = o.robustness.pooling;
    head = train_probe(features, data.labels, o.probe).to_head();
    m.seeds["probe"] = o.probe.seed;
  }
  const auto curve = robustness_curve(weights, config, head, data, tile_bands(o.window), o.robustness);

  Csv csv({"band_low", "band_high", "accuracy_clean", "accuracy_noisy", "drop"});
  Series drop{"accuracy drop", {}, {}};
  for (const auto& r : curve) {
    csv.row({format_number(r.band.low), format_number(r.band.high), format_number(r.clean_accuracy),
             format_number(r.noisy_accuracy), format_number(r.drop)});
    drop.x.push_back((r.band.low + r.band.high) / 2);
    drop.y.push_back(r.drop);
  }
  csv.save(o.out);
  m.outputs.emplace_back(o.out);
  if (!o.svg.empty()) {
    write_svg(o.svg, "Band-limited noise robustness", "frequency (x pi)", "accuracy drop", {drop});
    m.outputs.emplace_back(o.svg);
  }
  m.write(manifest_path(o.manifest.path, o.out));
}

// ---------------------------------------------------------------- probe

struct ProbeCmdOptions {
  std::string in, labels, out, svg;
  std::string pooling = "mean";
  LayerwiseProbeOptions opts;
  ManifestOption manifest;
};

void run_probe(ProbeCmdOptions o, const std::vector<std::string>& args) {
  Manifest m{"probe", args};
  std::vector<fs::path> paths;
  const auto bundles = load_dataset(o.in, &paths);
  m.inputs = paths;
  const fs::path labels_file = o.labels.empty() ? fs::path(o.in) / "labels.csv" : fs::path(o.labels);
  require(fs::exists(labels_file), ErrorCode::kIoError, "missing labels file " + labels_file.string());
  m.inputs.push_back(labels_file);
  const auto labels = labels_for(paths, labels_file);
  o.opts.probe.pooling = parse_pooling(o.pooling);
  m.seeds["probe"] = o.opts.probe.seed;
  m.seeds["split"] = o.opts.split_seed;
  const auto results = layerwise_probe(std::span<const ActivationBundle>(bundles), labels, o.opts);

  Csv csv({"depth", "train_accuracy", "test_accuracy", "epochs", "seed"});
  Series train{"train", {}, {}}, test{"test", {}, {}};
  for (const auto& r : results) {
    csv.row({std::to_string(r.depth), format_number(r.train_accuracy), format_number(r.test_accuracy),
             std::to_string(o.opts.probe.epochs), std::to_string(o.opts.probe.seed)});
    train.x.push_back(r.depth);
    train.y.push_back(r.train_accuracy);
    test.x.push_back(r.depth);
    test.y.push_back(r.test_accuracy);
  }
  csv.save(o.out);
  m.outputs.emplace_back(o.out);
  if (!o.svg.empty()) {
    write_svg(o.svg, "Layerwise linear probe", "depth", "accuracy", {train, test});
    m.outputs.emplace_back(o.svg);
  }
  m.write(manifest_path(o.manifest.path, o.out));
}

// ---------------------------------------------------------- hybrid-eval

struct HybridOptions {
  std::string view1, view2, negatives, out;
  HybridConfig hybrid;
  std::string norm = "l1";
  std::uint64_t mask_seed = 0;
  std::optional<int> depth;
  ManifestOption manifest;
};

Tensor spatial_tokens(const Tensor& reprs, bool use_cls) {
  if (!use_cls) return reprs;
  const auto n = reprs.dim(0) - 1, d = reprs.dim(1);
  Tensor out(Shape{n, d});
  std::copy(reprs.data().begin() + d, reprs.data().end(), out.data().begin());
  return out;
}

void run_hybrid_eval(HybridOptions o, const std::vector<std::string>& args) {
  Manifest m{"hybrid-eval", args};
  o.hybrid.norm = o.norm == "l2" ? ReconstructionNorm::kL2 : ReconstructionNorm::kL1;
  o.hybrid.validate();
  const auto a = load_bundle(o.view1);
  const auto b = load_bundle(o.view2);
  require(a.config == b.config, ErrorCode::kMixedBundles, "the two views come from different model configs");
  std::vector<fs::path> neg_paths;
  const auto negatives = load_dataset(o.negatives, &neg_paths);
  require(negatives[0].config == a.config, ErrorCode::kMixedBundles, "negatives come from a different model config");
  m.inputs = {o.view1, o.view2};
  m.inputs.insert(m.inputs.end(), neg_paths.begin(), neg_paths.end());
  m.seeds["mask"] = o.mask_seed;

  const auto& config = a.config;
  const int depth = o.depth.value_or(config.depth);
  require(depth >= 0 && depth <= config.depth, ErrorCode::kInvalidArgument, "--depth out of range");
  auto pooled = [&](const ActivationBundle& x) { return pool(x.representations[depth], Pooling::kMeanTokens, config.use_cls); };
  Tensor negs(Shape{static_cast<std::int64_t>(negatives.size()), config.dim});
  for (std::size_t i = 0; i < negatives.size(); ++i) {
    const auto p = pooled(negatives[i]);
    std::copy(p.data().begin(), p.data().end(), negs.data().begin() + static_cast<std::ptrdiff_t>(i * config.dim));
  }
  const double l_cl = infonce(pooled(a), pooled(b), negs, o.hybrid.temperature);
  const auto mask = random_mask(config.grid(), config.grid(), o.hybrid.mask_ratio, o.mask_seed);
  const double l_mim = mim_loss(spatial_tokens(a.representations[depth], config.use_cls),
                                spatial_tokens(b.representations[depth], config.use_cls), mask, o.hybrid.norm);
  const double total = hybrid_loss(l_mim, l_cl, o.hybrid.lambda);

  nlohmann::json j;
  j["depth"] = depth;
  j["lambda"] = o.hybrid.lambda;
  j["temperature"] = o.hybrid.temperature;
  j["mask_ratio"] = o.hybrid.mask_ratio;
  j["mask_seed"] = o.mask_seed;
  j["masked_tokens"] = std::count(mask.begin(), mask.end(), true);
  j["negatives"] = negatives.size();
  j["norm"] = o.norm;
  j["loss_mim"] = l_mim;
  j["loss_contrastive"] = l_cl;
  j["loss_hybrid"] = total;
  const std::string text = j.dump(2) + "\n";
  std::fputs(text.c_str(), stdout);
  if (!o.out.empty()) {
    write_text(o.out, text);
    m.outputs.emplace_back(o.out);
    m.write(manifest_path(o.manifest.path, o.out));
  }
}

// --------------------------------------------------------------- replay

int run_replay(const std::string& manifest_file) {
  std::ifstream in(manifest_file);
  require(static_cast<bool>(in), ErrorCode::kIoError, "cannot open " + manifest_file);
  const auto j = nlohmann::json::parse(in);
  const auto args = j.at("arguments").get<std::vector<std::string>>();
  const fs::path previous = fs::current_path();
  fs::current_path(j.at("working_directory").get<std::string>());
  const int rc = run_cli(args);
  int mismatches = 0;
  if (rc == kExitOk) {
    for (const auto& out : j.at("outputs")) {
      const auto path = out.at("path").get<std::string>();
      const bool same = fs::exists(path) && nadf::file_sha256(path) == out.at("sha256").get<std::string>();
      std::printf("%s %s\n", same ? "ok" : "MISMATCH", path.c_str());
      if (!same) ++mismatches;
    }
  }
  fs::current_path(previous);
  if (rc != kExitOk) return rc;
  return mismatches == 0 ? kExitOk : kExitContract;
}

template <typename T>
void add_out(CLI::App* sub, T& o, const char* what) {
  sub->add_option("--in", o.in, "Directory of .nad bundles")->required()->check(CLI::ExistingDirectory);
  sub->add_option("--out", o.out, what)->required();
  sub->add_option("--svg", o.svg, "Also render an SVG line chart");
  o.manifest.add_to(sub);
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"Diagnostics for Vision Transformer representations stored as .nad activation bundles", "vitlens"};
  app.set_version_flag("--version", VITLENS_VERSION);
  app.require_subcommand(1);

  DumpOptions dump;
  auto* dump_cmd = app.add_subcommand("dump", "Run the built-in ViT over images and write one .nad bundle per image");
  dump.model.add_to(dump_cmd);
  dump.images.add_to(dump_cmd);
  dump.manifest.add_to(dump_cmd);
  dump_cmd->add_option("--restrict-kernel", dump.kernel, "Local attention window (odd kernel size)");
  dump_cmd->add_flag("--cls-local", dump.cls_local, "Under --restrict-kernel, CLS attends only to itself");
  dump_cmd->add_option("--uniform-from", dump.uniform_from, "Force uniform attention in layers >= this index");
  dump_cmd->add_option("--head-outputs", dump.head_outputs, "Per-head output capture")
      ->check(CLI::IsMember({"none", "pre", "post"}))
      ->capture_default_str();
  dump_cmd->add_flag("--save-weights", dump.save_weights, "Also write weights.nad into --out");
  dump_cmd->add_option("--out", dump.out, "Output directory")->required();

  AttnOptions attn;
  auto* attn_cmd = app.add_subcommand("attn-stats", "Attention distance and NMI per layer and head");
  add_out(attn_cmd, attn, "CSV output (layer, head, metric, value)");
  attn_cmd->add_option("--json", attn.json, "Also write the statistics as JSON");
  attn_cmd->add_option("--svg-nmi", attn.svg_nmi, "Also render NMI per head as an SVG chart");
  attn_cmd->add_option("--patch-px", attn.patch_px, "Patch size in pixels (default: from the bundles)");
  attn_cmd->add_flag("--nmi-exclude-cls", attn.nmi_exclude_cls, "Drop the CLS token from NMI");

  ReprOptions repr;
  auto* repr_cmd = app.add_subcommand("repr-stats", "Cosine similarity between heads, across depth and between tokens");
  add_out(repr_cmd, repr, "CSV output (layer, metric, value)");

  FourierCmdOptions fourier;
  auto* fourier_cmd = app.add_subcommand("fourier", "Relative log amplitude of token maps per layer");
  add_out(fourier_cmd, fourier, "CSV output (layer, freq_bin, log_amplitude, delta)");
  fourier_cmd->add_option("--bins", fourier.fourier.bins, "Radial frequency bins")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  fourier_cmd->add_option("--epsilon", fourier.fourier.epsilon, "Amplitude floor inside the log")->capture_default_str();

  SvdOptions svd;
  auto* svd_cmd = app.add_subcommand("svd", "Singular value spectra of token or image representations");
  add_out(svd_cmd, svd, "CSV output (layer, index, sigma, delta_log, level)");
  svd_cmd->add_option("--level", svd.level, "token or image")->check(CLI::IsMember({"token", "image"}))->capture_default_str();
  svd_cmd->add_option("--reference", svd.reference, "Reference singular value for delta_log")
      ->check(CLI::IsMember({"largest", "second"}))
      ->capture_default_str();
  svd_cmd->add_flag("--no-center", svd.no_center, "Do not subtract the mean before the SVD");

  NoiseOptions noise;
  auto* noise_cmd = app.add_subcommand("noise", "Accuracy drop under band-limited noise, one row per frequency band");
  noise.model.add_to(noise_cmd);
  noise.images.add_to(noise_cmd);
  noise.manifest.add_to(noise_cmd);
  noise_cmd->add_option("--rms", noise.robustness.rms, "Noise root-mean-square per channel")->capture_default_str();
  noise_cmd->add_option("--seed", noise.robustness.seed, "Noise seed")->capture_default_str();
  noise_cmd->add_option("--window", noise.window, "Band width as a fraction of pi")->capture_default_str();
  noise_cmd->add_flag("--clamp", noise.robustness.clamp, "Clamp noisy pixels to [0, 1]");
  noise_cmd->add_option("--restrict-kernel", noise.kernel, "Local attention window (odd kernel size)");
  noise_cmd->add_option("--pooling", noise.pooling, "mean or cls")->check(CLI::IsMember({"mean", "cls"}))->capture_default_str();
  noise_cmd->add_option("--epochs", noise.probe.epochs, "Epochs of the fallback probe head")->capture_default_str();
  noise_cmd->add_option("--lr", noise.probe.learning_rate, "Learning rate of the fallback probe head")->capture_default_str();
  noise_cmd->add_option("--probe-seed", noise.probe.seed, "Seed of the fallback probe head")->capture_default_str();
  noise_cmd->add_option("--out", noise.out, "CSV output (band_low, band_high, accuracy_clean, accuracy_noisy, drop)")
      ->required();
  noise_cmd->add_option("--svg", noise.svg, "Also render an SVG line chart");

  ProbeCmdOptions probe;
  auto* probe_cmd = app.add_subcommand("probe", "Layerwise linear probe accuracy");
  add_out(probe_cmd, probe, "CSV output (depth, train_accuracy, test_accuracy, epochs, seed)");
  probe_cmd->add_option("--labels", probe.labels, "labels.csv (default: <in>/labels.csv)");
  probe_cmd->add_option("--pooling", probe.pooling, "mean or cls")->check(CLI::IsMember({"mean", "cls"}))->capture_default_str();
  probe_cmd->add_option("--epochs", probe.opts.probe.epochs, "Training epochs")->capture_default_str();
  probe_cmd->add_option("--lr", probe.opts.probe.learning_rate, "Learning rate")->capture_default_str();
  probe_cmd->add_option("--batch-size", probe.opts.probe.batch_size, "Mini-batch size")->capture_default_str();
  probe_cmd->add_option("--weight-decay", probe.opts.probe.weight_decay, "L2 penalty on weights")->capture_default_str();
  probe_cmd->add_option("--seed", probe.opts.probe.seed, "Batch-order seed")->capture_default_str();
  probe_cmd->add_option("--split-seed", probe.opts.split_seed, "Train/test split seed")->capture_default_str();
  probe_cmd->add_option("--train-fraction", probe.opts.train_fraction, "Fraction of bundles used for training")
      ->capture_default_str();

  HybridOptions hybrid;
  auto* hybrid_cmd = app.add_subcommand("hybrid-eval", "Masked-reconstruction, contrastive and hybrid losses on two views");
  hybrid_cmd->add_option("--view1", hybrid.view1, "First view (.nad)")->required()->check(CLI::ExistingFile);
  hybrid_cmd->add_option("--view2", hybrid.view2, "Second view (.nad)")->required()->check(CLI::ExistingFile);
  hybrid_cmd->add_option("--negatives", hybrid.negatives, "Directory of .nad bundles used as contrastive negatives")
      ->required()
      ->check(CLI::ExistingDirectory);
  hybrid_cmd->add_option("--lambda", hybrid.hybrid.lambda, "Weight of the contrastive term")->capture_default_str();
  hybrid_cmd->add_option("--temperature", hybrid.hybrid.temperature, "InfoNCE temperature")->capture_default_str();
  hybrid_cmd->add_option("--mask-ratio", hybrid.hybrid.mask_ratio, "Fraction of masked patches")->capture_default_str();
  hybrid_cmd->add_option("--mask-seed", hybrid.mask_seed, "Mask seed")->capture_default_str();
  hybrid_cmd->add_option("--norm", hybrid.norm, "l1 or l2 reconstruction")->check(CLI::IsMember({"l1", "l2"}))->capture_default_str();
  hybrid_cmd->add_option("--depth", hybrid.depth, "Representation depth (default: final)");
  hybrid_cmd->add_option("--out", hybrid.out, "Also write the JSON to this file");
  hybrid.manifest.add_to(hybrid_cmd);

  std::string manifest_file;
  auto* replay_cmd = app.add_subcommand("replay", "Re-run a manifest and verify every output hash");
  replay_cmd->add_option("--manifest", manifest_file, "Manifest JSON")->required()->check(CLI::ExistingFile);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitContract;
  }

  try {
    if (dump_cmd->parsed()) run_dump(dump, args);
    else if (attn_cmd->parsed()) run_attn_stats(attn, args);
    else if (repr_cmd->parsed()) run_repr_stats(repr, args);
    else if (fourier_cmd->parsed()) run_fourier(fourier, args);
    else if (svd_cmd->parsed()) run_svd(svd, args);
    else if (noise_cmd->parsed()) run_noise(noise, args);
    else if (probe_cmd->parsed()) run_probe(probe, args);
    else if (hybrid_cmd->parsed()) run_hybrid_eval(hybrid, args);
    else if (replay_cmd->parsed()) return run_replay(manifest_file);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code(e.code());
  } catch (const nlohmann::json::exception& e) {
    std::fprintf(stderr, "error: invalid JSON: %s\n", e.what());
    return kExitContract;
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitContract;
  }
  return kExitOk;
}

}  // namespace vitlens::cli
