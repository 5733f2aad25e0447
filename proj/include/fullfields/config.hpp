#pragma once

#include <cstdlib>
#include <filesystem>
#include <json.hpp>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "fullfields/extraction.hpp"
#include "fullfields/io.hpp"
#include "fullfields/metrics.hpp"
#include "fullfields/synthetic.hpp"
#include "fullfields/transformer.hpp"
#include "fullfields/vqudf.hpp"

namespace ff {

// Declarative per-run configuration. One section per pipeline stage; every
// key has a desk-scale default, unknown keys are rejected, and any key can be
// overridden from the environment as FF_<SECTION>_<KEY> (FF_SEED for the
// top-level seed), e.g. FF_VQUDF_STEPS=200.
struct RunConfig {
  uint64_t seed = 1;

  struct Data {
    std::string input_dir;
    int points_sampled = 4096;
    int voxel_resolution = 32;
    double curation_threshold = 0.05;
    int curation_samples = 2048;
    int udf_queries = 8192;
    double clamp = 0.1;
    double uniform_fraction = 0.5;
    std::vector<double> sigmas = {0.08, 0.02, 0.003};
    std::string split = "all";  // "all" or "curated"
  } data;

  struct Vqudf {
    int latent_resolution = 8;  // K
    int codebook_size = 64;     // V
    std::vector<int> channels_per_scale = {16, 32, 16};
    std::vector<int> hidden_widths = {128, 128, 128};
    std::string output_activation = "softplus";
    double lr = 1e-3;
    int steps = 3000;
    double beta = 1.0;
    int queries_per_step = 2048;
  } vqudf;

  struct Transformer {
    int layers = 2;
    int heads = 2;
    int embed_dim = 64;
    double lr = 1e-3;
    int steps = 3000;
    double temperature = 1.0;
    int top_k = 16;
  } transformer;

  struct Extraction {
    int num_seeds = 8000;
    int projection_steps = 7;
    double acceptance_eps = 5e-3;
    int densify_rounds = 3;
    double densify_noise = 0.01;
    double step_damping = 1.0;
  } extraction;

  struct Metrics {
    int cloud_size = 2048;
    int jsd_resolution = 28;
  } metrics;

  struct Synthetic {
    int count = 20;
    std::string primitives = "mixed";  // mixed | spheres | boxes
    int min_shells = 1;
    int max_shells = 3;
  } synthetic;

  VqudfConfig vqudf_model_config() const {
    VqudfConfig cfg;
    cfg.encoder.input_resolution = data.voxel_resolution;
    cfg.encoder.channels_per_scale = vqudf.channels_per_scale;
    cfg.encoder.latent_resolution = vqudf.latent_resolution;
    cfg.codebook_size = vqudf.codebook_size;
    cfg.decoder.hidden_widths = vqudf.hidden_widths;
    cfg.decoder.output_activation = vqudf.output_activation == "relu"
                                        ? DecoderConfig::Activation::relu
                                        : DecoderConfig::Activation::softplus;
    cfg.decoder.clamp = data.clamp;
    cfg.beta = vqudf.beta;
    return cfg;
  }

  TransformerConfig transformer_model_config() const {
    TransformerConfig cfg;
    cfg.layers = transformer.layers;
    cfg.heads = transformer.heads;
    cfg.embed_dim = transformer.embed_dim;
    int k3 = vqudf.latent_resolution * vqudf.latent_resolution * vqudf.latent_resolution;
    cfg.context_length = k3 + 1;
    cfg.vocab_size = vqudf.codebook_size + 1;
    return cfg;
  }

  ExtractionConfig extraction_config() const {
    ExtractionConfig cfg;
    cfg.num_seeds = extraction.num_seeds;
    cfg.projection_steps = extraction.projection_steps;
    cfg.acceptance_eps = extraction.acceptance_eps;
    cfg.densify_rounds = extraction.densify_rounds;
    cfg.densify_noise = extraction.densify_noise;
    cfg.step_damping = extraction.step_damping;
    return cfg;
  }

  MetricsConfig metrics_config() const {
    MetricsConfig cfg;
    cfg.cloud_size = metrics.cloud_size;
    cfg.jsd_resolution = metrics.jsd_resolution;
    return cfg;
  }

  SyntheticOptions synthetic_options() const {
    SyntheticOptions opt;
    opt.min_shells = synthetic.min_shells;
    opt.max_shells = synthetic.max_shells;
    if (synthetic.primitives == "spheres")
      opt.primitives = SyntheticOptions::Primitives::spheres;
    else if (synthetic.primitives == "boxes")
      opt.primitives = SyntheticOptions::Primitives::boxes;
    else
      opt.primitives = SyntheticOptions::Primitives::mixed;
    return opt;
  }

  nlohmann::json to_json() const;
  void validate() const;
};

namespace detail_config {

inline void reject_unknown_keys(const nlohmann::json& j, const std::set<std::string>& known,
                                const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key()))
      throw std::invalid_argument("config: unknown key '" + where + it.key() + "'");
}

template <typename T>
void get_if(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

inline void check_range(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("config: " + what);
}

}  // namespace detail_config

inline void RunConfig::validate() const {
  using detail_config::check_range;
  check_range(data.points_sampled >= 1, "data.points_sampled must be >= 1");
  check_range(data.voxel_resolution >= 2, "data.voxel_resolution must be >= 2");
  check_range(data.curation_threshold >= 0.0 && data.curation_threshold <= 1.0,
              "data.curation_threshold must lie in [0, 1]");
  check_range(data.curation_samples >= 1, "data.curation_samples must be >= 1");
  check_range(data.udf_queries >= 1, "data.udf_queries must be >= 1");
  check_range(data.clamp > 0.0, "data.clamp must be > 0");
  check_range(data.uniform_fraction >= 0.0 && data.uniform_fraction <= 1.0,
              "data.uniform_fraction must lie in [0, 1]");
  check_range(data.split == "all" || data.split == "curated",
              "data.split must be 'all' or 'curated'");
  if (!data.input_dir.empty())
    check_range(std::filesystem::exists(data.input_dir),
                "data.input_dir does not exist: " + data.input_dir);

  check_range(vqudf.latent_resolution == 8 || vqudf.latent_resolution == 16 ||
                  vqudf.latent_resolution == 64,
              "vqudf.latent_resolution must be one of {8, 16, 64}");
  check_range(vqudf.codebook_size >= 2, "vqudf.codebook_size must be >= 2");
  check_range(!vqudf.channels_per_scale.empty(), "vqudf.channels_per_scale must be non-empty");
  check_range(vqudf.output_activation == "softplus" || vqudf.output_activation == "relu",
              "vqudf.output_activation must be 'softplus' or 'relu'");
  check_range(vqudf.lr > 0.0, "vqudf.lr must be > 0");
  check_range(vqudf.steps >= 0, "vqudf.steps must be >= 0");
  check_range(vqudf.beta >= 0.0, "vqudf.beta must be >= 0");
  check_range(vqudf.queries_per_step >= 1, "vqudf.queries_per_step must be >= 1");

  check_range(transformer.layers >= 1, "transformer.layers must be >= 1");
  check_range(transformer.heads >= 1, "transformer.heads must be >= 1");
  check_range(transformer.embed_dim >= transformer.heads &&
                  transformer.embed_dim % transformer.heads == 0,
              "transformer.embed_dim must be divisible by heads");
  check_range(transformer.lr > 0.0, "transformer.lr must be > 0");
  check_range(transformer.steps >= 0, "transformer.steps must be >= 0");
  check_range(transformer.temperature > 0.0, "transformer.temperature must be > 0");
  check_range(transformer.top_k >= 0 && transformer.top_k <= vqudf.codebook_size,
              "transformer.top_k must lie in [0, codebook_size]");

  check_range(extraction.num_seeds >= 1, "extraction.num_seeds must be >= 1");
  check_range(extraction.projection_steps >= 1, "extraction.projection_steps must be >= 1");
  check_range(extraction.acceptance_eps > 0.0, "extraction.acceptance_eps must be > 0");
  check_range(extraction.densify_rounds >= 0, "extraction.densify_rounds must be >= 0");
  check_range(extraction.densify_noise >= 0.0, "extraction.densify_noise must be >= 0");
  check_range(extraction.step_damping > 0.0 && extraction.step_damping <= 1.0,
              "extraction.step_damping must lie in (0, 1]");

  check_range(metrics.cloud_size >= 1, "metrics.cloud_size must be >= 1");
  check_range(metrics.jsd_resolution >= 2, "metrics.jsd_resolution must be >= 2");

  check_range(synthetic.count >= 1, "synthetic.count must be >= 1");
  check_range(synthetic.primitives == "mixed" || synthetic.primitives == "spheres" ||
                  synthetic.primitives == "boxes",
              "synthetic.primitives must be mixed, spheres, or boxes");
  check_range(synthetic.min_shells >= 1 && synthetic.max_shells >= synthetic.min_shells &&
                  synthetic.max_shells <= 3,
              "synthetic shell counts must satisfy 1 <= min <= max <= 3");

  // Cross-section consistency the models rely on.
  vqudf_model_config().validate();
  transformer_model_config().validate();
}

inline nlohmann::json RunConfig::to_json() const {
  return {
      {"seed", seed},
      {"data",
       {{"input_dir", data.input_dir},
        {"points_sampled", data.points_sampled},
        {"voxel_resolution", data.voxel_resolution},
        {"curation_threshold", data.curation_threshold},
        {"curation_samples", data.curation_samples},
        {"udf_queries", data.udf_queries},
        {"clamp", data.clamp},
        {"uniform_fraction", data.uniform_fraction},
        {"sigmas", data.sigmas},
        {"split", data.split}}},
      {"vqudf",
       {{"latent_resolution", vqudf.latent_resolution},
        {"codebook_size", vqudf.codebook_size},
        {"channels_per_scale", vqudf.channels_per_scale},
        {"hidden_widths", vqudf.hidden_widths},
        {"output_activation", vqudf.output_activation},
        {"lr", vqudf.lr},
        {"steps", vqudf.steps},
        {"beta", vqudf.beta},
        {"queries_per_step", vqudf.queries_per_step}}},
      {"transformer",
       {{"layers", transformer.layers},
        {"heads", transformer.heads},
        {"embed_dim", transformer.embed_dim},
        {"lr", transformer.lr},
        {"steps", transformer.steps},
        {"temperature", transformer.temperature},
        {"top_k", transformer.top_k}}},
      {"extraction",
       {{"num_seeds", extraction.num_seeds},
        {"projection_steps", extraction.projection_steps},
        {"acceptance_eps", extraction.acceptance_eps},
        {"densify_rounds", extraction.densify_rounds},
        {"densify_noise", extraction.densify_noise},
        {"step_damping", extraction.step_damping}}},
      {"metrics",
       {{"cloud_size", metrics.cloud_size}, {"jsd_resolution", metrics.jsd_resolution}}},
      {"synthetic",
       {{"count", synthetic.count},
        {"primitives", synthetic.primitives},
        {"min_shells", synthetic.min_shells},
        {"max_shells", synthetic.max_shells}}},
  };
}

inline RunConfig run_config_from_json(const nlohmann::json& j) {
  using namespace detail_config;
  RunConfig cfg;
  reject_unknown_keys(j, {"seed", "data", "vqudf", "transformer", "extraction", "metrics",
                          "synthetic"},
                      "");
  get_if(j, "seed", cfg.seed);
  if (j.contains("data")) {
    const auto& s = j.at("data");
    reject_unknown_keys(s, {"input_dir", "points_sampled", "voxel_resolution",
                            "curation_threshold", "curation_samples", "udf_queries", "clamp",
                            "uniform_fraction", "sigmas", "split"},
                        "data.");
    get_if(s, "input_dir", cfg.data.input_dir);
    get_if(s, "points_sampled", cfg.data.points_sampled);
    get_if(s, "voxel_resolution", cfg.data.voxel_resolution);
    get_if(s, "curation_threshold", cfg.data.curation_threshold);
    get_if(s, "curation_samples", cfg.data.curation_samples);
    get_if(s, "udf_queries", cfg.data.udf_queries);
    get_if(s, "clamp", cfg.data.clamp);
    get_if(s, "uniform_fraction", cfg.data.uniform_fraction);
    get_if(s, "sigmas", cfg.data.sigmas);
    get_if(s, "split", cfg.data.split);
  }
  if (j.contains("vqudf")) {
    const auto& s = j.at("vqudf");
    reject_unknown_keys(s, {"latent_resolution", "codebook_size", "channels_per_scale",
                            "hidden_widths", "output_activation", "lr", "steps", "beta",
                            "queries_per_step"},
                        "vqudf.");
    get_if(s, "latent_resolution", cfg.vqudf.latent_resolution);
    get_if(s, "codebook_size", cfg.vqudf.codebook_size);
    get_if(s, "channels_per_scale", cfg.vqudf.channels_per_scale);
    get_if(s, "hidden_widths", cfg.vqudf.hidden_widths);
    get_if(s, "output_activation", cfg.vqudf.output_activation);
    get_if(s, "lr", cfg.vqudf.lr);
    get_if(s, "steps", cfg.vqudf.steps);
    get_if(s, "beta", cfg.vqudf.beta);
    get_if(s, "queries_per_step", cfg.vqudf.queries_per_step);
  }
  if (j.contains("transformer")) {
    const auto& s = j.at("transformer");
    reject_unknown_keys(s, {"layers", "heads", "embed_dim", "lr", "steps", "temperature",
                            "top_k"},
                        "transformer.");
    get_if(s, "layers", cfg.transformer.layers);
    get_if(s, "heads", cfg.transformer.heads);
    get_if(s, "embed_dim", cfg.transformer.embed_dim);
    get_if(s, "lr", cfg.transformer.lr);
    get_if(s, "steps", cfg.transformer.steps);
    get_if(s, "temperature", cfg.transformer.temperature);
    get_if(s, "top_k", cfg.transformer.top_k);
  }
  if (j.contains("extraction")) {
    const auto& s = j.at("extraction");
    reject_unknown_keys(s, {"num_seeds", "projection_steps", "acceptance_eps", "densify_rounds",
                            "densify_noise", "step_damping"},
                        "extraction.");
    get_if(s, "num_seeds", cfg.extraction.num_seeds);
    get_if(s, "projection_steps", cfg.extraction.projection_steps);
    get_if(s, "acceptance_eps", cfg.extraction.acceptance_eps);
    get_if(s, "densify_rounds", cfg.extraction.densify_rounds);
    get_if(s, "densify_noise", cfg.extraction.densify_noise);
    get_if(s, "step_damping", cfg.extraction.step_damping);
  }
  if (j.contains("metrics")) {
    const auto& s = j.at("metrics");
    reject_unknown_keys(s, {"cloud_size", "jsd_resolution"}, "metrics.");
    get_if(s, "cloud_size", cfg.metrics.cloud_size);
    get_if(s, "jsd_resolution", cfg.metrics.jsd_resolution);
  }
  if (j.contains("synthetic")) {
    const auto& s = j.at("synthetic");
    reject_unknown_keys(s, {"count", "primitives", "min_shells", "max_shells"}, "synthetic.");
    get_if(s, "count", cfg.synthetic.count);
    get_if(s, "primitives", cfg.synthetic.primitives);
    get_if(s, "min_shells", cfg.synthetic.min_shells);
    get_if(s, "max_shells", cfg.synthetic.max_shells);
  }
  return cfg;
}

// FF_<SECTION>_<KEY> environment overrides; values parse as JSON scalars,
// falling back to a plain string (so FF_DATA_SPLIT=curated works unquoted).
inline nlohmann::json apply_env_overrides(nlohmann::json j,
                                          const char* const* envp = nullptr) {
  struct Entry {
    const char* env;
    const char* section;  // nullptr for top level
    const char* key;
  };
  static const std::vector<Entry> entries = [] {
    std::vector<Entry> e{{"FF_SEED", nullptr, "seed"}};
    auto add = [&](const char* env, const char* sec, const char* key) {
      e.push_back({env, sec, key});
    };
    add("FF_DATA_INPUT_DIR", "data", "input_dir");
    add("FF_DATA_POINTS_SAMPLED", "data", "points_sampled");
    add("FF_DATA_VOXEL_RESOLUTION", "data", "voxel_resolution");
    add("FF_DATA_CURATION_THRESHOLD", "data", "curation_threshold");
    add("FF_DATA_CURATION_SAMPLES", "data", "curation_samples");
    add("FF_DATA_UDF_QUERIES", "data", "udf_queries");
    add("FF_DATA_CLAMP", "data", "clamp");
    add("FF_DATA_UNIFORM_FRACTION", "data", "uniform_fraction");
    add("FF_DATA_SPLIT", "data", "split");
    add("FF_VQUDF_LATENT_RESOLUTION", "vqudf", "latent_resolution");
    add("FF_VQUDF_CODEBOOK_SIZE", "vqudf", "codebook_size");
    add("FF_VQUDF_OUTPUT_ACTIVATION", "vqudf", "output_activation");
    add("FF_VQUDF_LR", "vqudf", "lr");
    add("FF_VQUDF_STEPS", "vqudf", "steps");
    add("FF_VQUDF_BETA", "vqudf", "beta");
    add("FF_VQUDF_QUERIES_PER_STEP", "vqudf", "queries_per_step");
    add("FF_TRANSFORMER_LAYERS", "transformer", "layers");
    add("FF_TRANSFORMER_HEADS", "transformer", "heads");
    add("FF_TRANSFORMER_EMBED_DIM", "transformer", "embed_dim");
    add("FF_TRANSFORMER_LR", "transformer", "lr");
    add("FF_TRANSFORMER_STEPS", "transformer", "steps");
    add("FF_TRANSFORMER_TEMPERATURE", "transformer", "temperature");
    add("FF_TRANSFORMER_TOP_K", "transformer", "top_k");
    add("FF_EXTRACTION_NUM_SEEDS", "extraction", "num_seeds");
    add("FF_EXTRACTION_PROJECTION_STEPS", "extraction", "projection_steps");
    add("FF_EXTRACTION_ACCEPTANCE_EPS", "extraction", "acceptance_eps");
    add("FF_EXTRACTION_DENSIFY_ROUNDS", "extraction", "densify_rounds");
    add("FF_EXTRACTION_DENSIFY_NOISE", "extraction", "densify_noise");
    add("FF_EXTRACTION_STEP_DAMPING", "extraction", "step_damping");
    add("FF_METRICS_CLOUD_SIZE", "metrics", "cloud_size");
    add("FF_METRICS_JSD_RESOLUTION", "metrics", "jsd_resolution");
    add("FF_SYNTHETIC_COUNT", "synthetic", "count");
    add("FF_SYNTHETIC_PRIMITIVES", "synthetic", "primitives");
    add("FF_SYNTHETIC_MIN_SHELLS", "synthetic", "min_shells");
    add("FF_SYNTHETIC_MAX_SHELLS", "synthetic", "max_shells");
    return e;
  }();
  (void)envp;
  for (const auto& e : entries) {
    const char* raw = std::getenv(e.env);
    if (!raw) continue;
    nlohmann::json value = nlohmann::json::parse(raw, nullptr, /*allow_exceptions=*/false);
    if (value.is_discarded()) value = std::string(raw);
    if (e.section)
      j[e.section][e.key] = value;
    else
      j[e.key] = value;
  }
  return j;
}

inline RunConfig load_run_config(const std::filesystem::path& path, bool with_env = true) {
  nlohmann::json j = path.empty() ? nlohmann::json::object()
                                  : nlohmann::json::parse(read_text_file(path));
  if (with_env) j = apply_env_overrides(std::move(j));
  RunConfig cfg = run_config_from_json(j);
  cfg.validate();
  return cfg;
}

}  // namespace ff
