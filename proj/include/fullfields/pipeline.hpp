#pragma once

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <json.hpp>
#include <string>
#include <vector>

#include "fullfields/config.hpp"
#include "fullfields/curation.hpp"
#include "fullfields/extraction.hpp"
#include "fullfields/io.hpp"
#include "fullfields/metrics.hpp"
#include "fullfields/synthetic.hpp"
#include "fullfields/transformer.hpp"
#include "fullfields/udf_data.hpp"
#include "fullfields/version.hpp"
#include "fullfields/vqudf.hpp"

namespace ff {

// ---------------------------------------------------------------------------
// Logging
// ---------------------------------------------------------------------------

enum class LogLevel { debug = 0, info = 1, warn = 2, error = 3 };

inline LogLevel& log_level() {
  static LogLevel level = LogLevel::info;
  return level;
}

inline void log(LogLevel level, const std::string& msg) {
  if (level < log_level()) return;
  static const char* names[] = {"debug", "info", "warn", "error"};
  std::cerr << "[" << names[int(level)] << "] " << msg << "\n";
}

inline LogLevel parse_log_level(const std::string& s) {
  if (s == "debug") return LogLevel::debug;
  if (s == "info") return LogLevel::info;
  if (s == "warn") return LogLevel::warn;
  if (s == "error") return LogLevel::error;
  throw std::invalid_argument("unknown log level '" + s + "'");
}

namespace detail_pipeline {

inline std::vector<std::filesystem::path> list_files(const std::filesystem::path& dir,
                                                     const std::vector<std::string>& exts) {
  if (!std::filesystem::is_directory(dir))
    throw std::runtime_error("not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    if (std::find(exts.begin(), exts.end(), ext) != exts.end()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  atomic_write(path, [&](std::ostream& out) { out << j.dump(2) << "\n"; });
}

inline nlohmann::json run_metadata(const RunConfig& cfg) {
  return {{"seed", cfg.seed}, {"version", build_version()}, {"config", cfg.to_json()}};
}

inline Rng shape_rng(const RunConfig& cfg, const std::string& id) {
  return Rng(splitmix64(cfg.seed ^ fnv1a(id.data(), id.size())));
}

}  // namespace detail_pipeline

// ---------------------------------------------------------------------------
// make-synthetic: nested-shell fixture dataset as OBJ files
// ---------------------------------------------------------------------------

struct MakeSyntheticResult {
  std::vector<std::filesystem::path> files;
};

inline MakeSyntheticResult cmd_make_synthetic(const RunConfig& cfg,
                                              const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  auto shapes =
      make_synthetic_nested_dataset(size_t(cfg.synthetic.count), cfg.seed, cfg.synthetic_options());
  MakeSyntheticResult res;
  nlohmann::json manifest = detail_pipeline::run_metadata(cfg);
  manifest["shapes"] = nlohmann::json::array();
  for (const auto& s : shapes) {
    std::filesystem::path p = out_dir / (s.id + ".obj");
    write_obj(p, s);
    res.files.push_back(p);
    manifest["shapes"].push_back({{"id", s.id},
                                  {"file", p.filename().string()},
                                  {"vertices", s.vertices.size()},
                                  {"faces", s.faces.size()}});
  }
  detail_pipeline::write_json(out_dir / "manifest.json", manifest);
  log(LogLevel::info, "make-synthetic: wrote " + std::to_string(res.files.size()) + " shapes to " +
                          out_dir.string());
  return res;
}

// ---------------------------------------------------------------------------
// prepare: normalize, sample, voxelize, compute ground-truth UDF, curate
// ---------------------------------------------------------------------------

struct PrepareResult {
  std::filesystem::path dataset_file;
  size_t prepared = 0;
  size_t warnings = 0;
};

inline PrepareResult cmd_prepare(const RunConfig& cfg, const std::filesystem::path& out_dir) {
  if (cfg.data.input_dir.empty())
    throw std::runtime_error("prepare: data.input_dir is not set");
  auto files =
      detail_pipeline::list_files(cfg.data.input_dir, {".obj", ".off", ".ply", ".xyz"});
  if (files.empty())
    throw std::runtime_error("prepare: no shape files in " + cfg.data.input_dir);

  std::filesystem::create_directories(out_dir / "voxels");
  std::filesystem::create_directories(out_dir / "udf");

  PrepareResult res;
  nlohmann::json dataset = detail_pipeline::run_metadata(cfg);
  dataset["shapes"] = nlohmann::json::array();
  std::string curation_lines;

  for (const auto& file : files) {
    try {
      SurfaceShape shape = read_shape(file);
      validate_shape(shape);
      shape = normalize_shape(shape);
      Rng rng = detail_pipeline::shape_rng(cfg, shape.id);

      std::vector<Vec3> surface = sample_surface(shape, size_t(cfg.data.points_sampled), rng);
      VoxelGrid grid = voxelize(surface, cfg.data.voxel_resolution);
      std::vector<Vec3> queries = sample_training_queries(
          shape, size_t(cfg.data.udf_queries), cfg.data.sigmas, cfg.data.uniform_fraction, rng);
      UdfSampleSet samples = ground_truth_udf(shape, queries, cfg.data.clamp, rng);
      CurationRecord rec = curate_internal(shape, cfg.data.curation_threshold, rng,
                                           size_t(cfg.data.curation_samples));

      std::filesystem::path vox_path = out_dir / "voxels" / (shape.id + ".vox");
      std::filesystem::path udf_path = out_dir / "udf" / (shape.id + ".udf");
      write_voxel_grid(vox_path, grid);
      write_udf_samples(udf_path, samples);

      nlohmann::json line = {{"shape_id", rec.shape_id},
                             {"interior_point_count", rec.interior_point_count},
                             {"total_point_count", rec.total_point_count},
                             {"accepted", rec.accepted}};
      curation_lines += line.dump() + "\n";
      dataset["shapes"].push_back({{"id", shape.id},
                                   {"voxel_file", "voxels/" + shape.id + ".vox"},
                                   {"udf_file", "udf/" + shape.id + ".udf"},
                                   {"accepted", rec.accepted},
                                   {"interior_fraction", rec.interior_fraction()}});
      ++res.prepared;
    } catch (const std::exception& e) {
      log(LogLevel::warn, "prepare: skipping " + file.string() + ": " + e.what());
      ++res.warnings;
    }
  }
  if (res.prepared == 0) throw std::runtime_error("prepare: empty dataset, nothing prepared");

  dataset["warnings"] = res.warnings;
  atomic_write(out_dir / "curation.jsonl", [&](std::ostream& out) { out << curation_lines; });
  res.dataset_file = out_dir / "dataset.json";
  detail_pipeline::write_json(res.dataset_file, dataset);
  log(LogLevel::info, "prepare: " + std::to_string(res.prepared) + " shapes, " +
                          std::to_string(res.warnings) + " warnings");
  return res;
}

// ---------------------------------------------------------------------------
// Dataset loading shared by the training commands
// ---------------------------------------------------------------------------

struct PreparedShape {
  std::string id;
  VoxelGrid grid;
  UdfSampleSet samples;
};

inline std::vector<PreparedShape> load_prepared_dataset(const RunConfig& cfg,
                                                        const std::filesystem::path& dataset_dir) {
  std::filesystem::path meta_path = dataset_dir / "dataset.json";
  if (!std::filesystem::exists(meta_path))
    throw std::runtime_error("missing dataset manifest: " + meta_path.string());
  nlohmann::json meta = nlohmann::json::parse(read_text_file(meta_path));

  std::vector<PreparedShape> out;
  for (const auto& entry : meta.at("shapes")) {
    if (cfg.data.split == "curated" && !entry.at("accepted").get<bool>()) continue;
    PreparedShape s;
    s.id = entry.at("id").get<std::string>();
    s.grid = read_voxel_grid(dataset_dir / entry.at("voxel_file").get<std::string>());
    s.samples = read_udf_samples(dataset_dir / entry.at("udf_file").get<std::string>());
    if (s.grid.resolution != cfg.data.voxel_resolution)
      throw std::runtime_error("dataset/config mismatch: shape '" + s.id + "' voxelized at " +
                               std::to_string(s.grid.resolution) + ", config wants " +
                               std::to_string(cfg.data.voxel_resolution));
    out.push_back(std::move(s));
  }
  if (out.empty())
    throw std::runtime_error("no shapes selected from " + dataset_dir.string() + " (split=" +
                             cfg.data.split + ")");
  return out;
}

// ---------------------------------------------------------------------------
// train-vqudf
// ---------------------------------------------------------------------------

struct TrainVqudfResult {
  std::filesystem::path checkpoint;
  std::filesystem::path curve;
  double final_reconstruction = 0.0;
};

inline TrainVqudfResult cmd_train_vqudf(const RunConfig& cfg,
                                        const std::filesystem::path& dataset_dir,
                                        const std::filesystem::path& out_dir) {
  auto shapes = load_prepared_dataset(cfg, dataset_dir);
  std::vector<std::pair<VoxelGrid, UdfSampleSet>> dataset;
  dataset.reserve(shapes.size());
  for (auto& s : shapes) dataset.emplace_back(std::move(s.grid), std::move(s.samples));

  VqudfModel model(cfg.vqudf_model_config(), cfg.seed);
  VqudfTrainOptions opt;
  opt.steps = size_t(cfg.vqudf.steps);
  opt.lr = cfg.vqudf.lr;
  opt.queries_per_step = size_t(cfg.vqudf.queries_per_step);
  opt.seed = cfg.seed;
  VqudfTrainResult train = train_vqudf(model, dataset, opt);

  std::filesystem::create_directories(out_dir);
  TrainVqudfResult res;
  res.checkpoint = out_dir / "vqudf.ckpt";
  res.curve = out_dir / "vqudf_curve.csv";
  save_vqudf_checkpoint(res.checkpoint, model, detail_pipeline::run_metadata(cfg));
  atomic_write(res.curve, [&](std::ostream& out) {
    out << "step,recon,commit,total\n";
    out.precision(10);
    for (const auto& p : train.curve)
      out << p.step << ',' << p.reconstruction << ',' << p.quantization << ',' << p.total << '\n';
  });
  if (!train.curve.empty()) res.final_reconstruction = train.curve.back().reconstruction;
  log(LogLevel::info, "train-vqudf: " + std::to_string(cfg.vqudf.steps) + " steps, final recon " +
                          std::to_string(res.final_reconstruction));
  return res;
}

// ---------------------------------------------------------------------------
// tokenize: freeze the autoencoder, emit one token sequence per shape
// ---------------------------------------------------------------------------

struct TokenizeResult {
  std::filesystem::path tokens;
  size_t sequences = 0;
  size_t distinct_tokens = 0;
};

inline TokenizeResult cmd_tokenize(const RunConfig& cfg, const std::filesystem::path& dataset_dir,
                                   const std::filesystem::path& vqudf_ckpt,
                                   const std::filesystem::path& out_dir) {
  if (!std::filesystem::exists(vqudf_ckpt))
    throw std::runtime_error("missing checkpoint: " + vqudf_ckpt.string());
  VqudfModel model = load_vqudf_checkpoint(vqudf_ckpt);
  auto shapes = load_prepared_dataset(cfg, dataset_dir);

  std::vector<std::vector<int>> sequences;
  std::vector<uint8_t> seen(size_t(model.codebook().vocab_size()), 0);
  nlohmann::json meta = detail_pipeline::run_metadata(cfg);
  meta["shapes"] = nlohmann::json::array();
  for (auto& s : shapes) {
    QuantizeResult q = model.encode_and_quantize(s.grid);
    for (int t : q.tokens) seen[size_t(t)] = 1;
    meta["shapes"].push_back({{"id", s.id}, {"tokens", q.tokens.size()}});
    sequences.push_back(std::move(q.tokens));
  }

  std::filesystem::create_directories(out_dir);
  TokenizeResult res;
  res.tokens = out_dir / "tokens.tok";
  res.sequences = sequences.size();
  for (uint8_t u : seen) res.distinct_tokens += u;
  write_token_dataset(res.tokens, sequences);
  meta["distinct_tokens"] = res.distinct_tokens;
  detail_pipeline::write_json(out_dir / "tokens.json", meta);
  log(LogLevel::info, "tokenize: " + std::to_string(res.sequences) + " sequences, " +
                          std::to_string(res.distinct_tokens) + " distinct tokens");
  return res;
}

// ---------------------------------------------------------------------------
// train-transformer
// ---------------------------------------------------------------------------

struct TrainTransformerResult {
  std::filesystem::path checkpoint;
  std::filesystem::path curve;
  double final_nll_per_token = 0.0;
};

inline TrainTransformerResult cmd_train_transformer(const RunConfig& cfg,
                                                    const std::filesystem::path& tokens_path,
                                                    const std::filesystem::path& out_dir) {
  if (!std::filesystem::exists(tokens_path))
    throw std::runtime_error("missing token dataset: " + tokens_path.string());
  std::vector<std::vector<int>> sequences = read_token_dataset(tokens_path);
  TransformerConfig tcfg = cfg.transformer_model_config();
  const size_t k3 = size_t(tcfg.context_length) - 1;
  for (const auto& s : sequences)
    if (s.size() != k3)
      throw std::runtime_error("token sequences have length " + std::to_string(s.size()) +
                               " but config wants K^3 = " + std::to_string(k3));

  LatentTransformer model(tcfg, cfg.seed);
  TransformerTrainOptions opt;
  opt.steps = size_t(cfg.transformer.steps);
  opt.lr = cfg.transformer.lr;
  opt.seed = cfg.seed;
  TransformerTrainResult train = train_transformer(model, sequences, opt);

  std::filesystem::create_directories(out_dir);
  TrainTransformerResult res;
  res.checkpoint = out_dir / "transformer.ckpt";
  res.curve = out_dir / "transformer_curve.csv";
  save_transformer_checkpoint(res.checkpoint, model, detail_pipeline::run_metadata(cfg));
  atomic_write(res.curve, [&](std::ostream& out) {
    out << "step,nll_per_token\n";
    out.precision(10);
    for (const auto& [step, nll] : train.curve) out << step << ',' << nll << '\n';
  });
  if (!train.curve.empty()) res.final_nll_per_token = train.curve.back().second;
  log(LogLevel::info, "train-transformer: final nll/token " +
                          std::to_string(res.final_nll_per_token));
  return res;
}

// ---------------------------------------------------------------------------
// Decoded-UDF field plumbing
// ---------------------------------------------------------------------------

// The returned field keeps a reference to the model; the caller owns both
// lifetimes. Gradients are left unset so extraction falls back to finite
// differences over the batched decoder.
inline UdfField make_decoder_field(const VqudfModel& model, LatentGrid zq) {
  UdfField f;
  f.evaluate = [&model, zq](const Vec3& p) {
    return model.decode(zq, std::vector<Vec3>{p})[0];
  };
  f.evaluate_batch = [&model, zq](const std::vector<Vec3>& pts) { return model.decode(zq, pts); };
  return f;
}

// ---------------------------------------------------------------------------
// generate: sample token sequences, decode, extract point clouds
// ---------------------------------------------------------------------------

struct GenerateResult {
  std::vector<std::filesystem::path> clouds;
  size_t failures = 0;
};

inline GenerateResult cmd_generate(const RunConfig& cfg, const std::filesystem::path& vqudf_ckpt,
                                   const std::filesystem::path& transformer_ckpt, int count,
                                   const std::filesystem::path& out_dir) {
  if (count < 1) throw std::invalid_argument("generate: count must be >= 1");
  if (!std::filesystem::exists(vqudf_ckpt))
    throw std::runtime_error("missing checkpoint: " + vqudf_ckpt.string());
  if (!std::filesystem::exists(transformer_ckpt))
    throw std::runtime_error("missing checkpoint: " + transformer_ckpt.string());
  VqudfModel vq = load_vqudf_checkpoint(vqudf_ckpt);
  LatentTransformer lt = load_transformer_checkpoint(transformer_ckpt);

  const int K = vq.config().encoder.latent_resolution;
  const int k3 = K * K * K;
  if (lt.config().context_length != k3 + 1 ||
      lt.config().vocab_size != vq.config().codebook_size + 1)
    throw std::runtime_error(
        "checkpoint mismatch: transformer (context=" + std::to_string(lt.config().context_length) +
        ", vocab=" + std::to_string(lt.config().vocab_size) + ") vs vqudf (K^3+1=" +
        std::to_string(k3 + 1) + ", V+1=" + std::to_string(vq.config().codebook_size + 1) + ")");

  std::filesystem::create_directories(out_dir);
  GenerateResult res;
  std::vector<std::vector<int>> all_tokens;
  for (int i = 0; i < count; ++i) {
    SamplerConfig sampler;
    sampler.temperature = cfg.transformer.temperature;
    sampler.top_k = cfg.transformer.top_k;
    sampler.seed = splitmix64(cfg.seed ^ (0x67656e0000ULL + uint64_t(i)));
    TokenSequenceT tokens = generate(lt, sampler, k3);
    all_tokens.push_back(tokens);

    LatentGrid zq = dequantize(tokens, vq.codebook(), K);
    UdfField field = make_decoder_field(vq, std::move(zq));
    char name[32];
    std::snprintf(name, sizeof(name), "gen_%03d", i);
    try {
      ExtractionResult ext = extract_dense_cloud(field, cfg.extraction_config(), sampler.seed);
      std::filesystem::path cloud_path = out_dir / (std::string(name) + ".ply");
      write_ply(cloud_path, ext.points);
      nlohmann::json meta = detail_pipeline::run_metadata(cfg);
      meta["sample_seed"] = sampler.seed;
      meta["extraction"] = {{"num_seeds", ext.stats.num_seeds},
                            {"accepted_initial", ext.stats.accepted_initial},
                            {"accepted_per_round", ext.stats.accepted_per_round},
                            {"rejection_rate", ext.stats.rejection_rate},
                            {"points", ext.stats.after_dedup}};
      detail_pipeline::write_json(out_dir / (std::string(name) + ".json"), meta);
      res.clouds.push_back(cloud_path);
    } catch (const std::exception& e) {
      log(LogLevel::warn, std::string(name) + ": " + e.what());
      ++res.failures;
    }
  }
  write_token_dataset(out_dir / "generated_tokens.tok", all_tokens);
  if (res.clouds.empty())
    throw std::runtime_error("generate: every sampled field failed extraction");
  log(LogLevel::info, "generate: wrote " + std::to_string(res.clouds.size()) + " clouds (" +
                          std::to_string(res.failures) + " failures)");
  return res;
}

// ---------------------------------------------------------------------------
// reconstruct: encode -> quantize -> decode -> extract for one input shape
// ---------------------------------------------------------------------------

struct ReconstructResult {
  std::filesystem::path cloud;
  size_t points = 0;
};

inline ReconstructResult cmd_reconstruct(const RunConfig& cfg,
                                         const std::filesystem::path& vqudf_ckpt,
                                         const std::filesystem::path& shape_path,
                                         const std::filesystem::path& out_dir) {
  if (!std::filesystem::exists(vqudf_ckpt))
    throw std::runtime_error("missing checkpoint: " + vqudf_ckpt.string());
  VqudfModel vq = load_vqudf_checkpoint(vqudf_ckpt);
  if (vq.config().encoder.input_resolution != cfg.data.voxel_resolution)
    throw std::runtime_error("checkpoint mismatch: encoder trained at resolution " +
                             std::to_string(vq.config().encoder.input_resolution) +
                             ", config voxelizes at " + std::to_string(cfg.data.voxel_resolution));

  SurfaceShape shape = read_shape(shape_path);
  validate_shape(shape);
  shape = normalize_shape(shape);
  Rng rng = detail_pipeline::shape_rng(cfg, shape.id);
  std::vector<Vec3> surface = sample_surface(shape, size_t(cfg.data.points_sampled), rng);
  VoxelGrid grid = voxelize(surface, cfg.data.voxel_resolution);

  QuantizeResult q = vq.encode_and_quantize(grid);
  UdfField field = make_decoder_field(vq, std::move(q.grid));
  ExtractionResult ext = extract_dense_cloud(field, cfg.extraction_config(), cfg.seed);

  std::filesystem::create_directories(out_dir);
  ReconstructResult res;
  res.cloud = out_dir / ("recon_" + shape.id + ".ply");
  res.points = ext.points.size();
  write_ply(res.cloud, ext.points);
  nlohmann::json meta = detail_pipeline::run_metadata(cfg);
  meta["shape"] = shape.id;
  meta["points"] = res.points;
  detail_pipeline::write_json(out_dir / ("recon_" + shape.id + ".json"), meta);
  log(LogLevel::info, "reconstruct: " + std::to_string(res.points) + " points");
  return res;
}

// ---------------------------------------------------------------------------
// evaluate: metric report for generated vs reference cloud directories
// ---------------------------------------------------------------------------

inline CloudSet load_cloud_dir(const std::filesystem::path& dir) {
  auto files = detail_pipeline::list_files(dir, {".ply", ".xyz"});
  if (files.empty()) throw std::runtime_error("no point clouds in " + dir.string());
  CloudSet set;
  for (const auto& f : files)
    set.push_back(f.extension() == ".ply" ? read_ply(f) : read_xyz(f));
  return set;
}

inline GenerationReport cmd_evaluate(const RunConfig& cfg,
                                     const std::filesystem::path& generated_dir,
                                     const std::filesystem::path& reference_dir,
                                     const std::filesystem::path& out_path) {
  CloudSet generated = load_cloud_dir(generated_dir);
  CloudSet reference = load_cloud_dir(reference_dir);
  GenerationReport report = evaluate(generated, reference, cfg.metrics_config(), cfg.seed);

  nlohmann::json j = report.to_json();
  j["run"] = detail_pipeline::run_metadata(cfg);
  j["generated_dir"] = generated_dir.string();
  j["reference_dir"] = reference_dir.string();
  std::filesystem::create_directories(out_path.parent_path().empty() ? "."
                                                                     : out_path.parent_path());
  detail_pipeline::write_json(out_path, j);
  log(LogLevel::info, "evaluate: mmd=" + std::to_string(report.mmd_raw) + " cov=" +
                          std::to_string(report.cov_percent) + "% jsd=" +
                          std::to_string(report.jsd_raw));
  return report;
}

}  // namespace ff
