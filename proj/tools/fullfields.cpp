// Pipeline driver: prepare data, train both stages, generate, reconstruct,
// and evaluate, all from one declarative config plus a seed.

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <string>

#include "fullfields/pipeline.hpp"
#include "fullfields/version.hpp"

namespace {

struct GlobalArgs {
  std::string config_path;
  std::string out_dir = "out";
  std::string log_level = "info";
  int64_t seed = -1;  // -1 keeps the config value
};

ff::RunConfig load_config(const GlobalArgs& g) {
  ff::RunConfig cfg = ff::load_run_config(g.config_path);
  if (g.seed >= 0) cfg.seed = uint64_t(g.seed);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fullfields: two-stage generative pipeline for nested 3D shapes"};
  app.set_version_flag("--version", std::string(ff::build_version()));
  app.require_subcommand(1);

  GlobalArgs g;
  app.add_option("--config", g.config_path, "Run config JSON (defaults apply when omitted)")
      ->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Override the config seed");
  app.add_option("--out", g.out_dir, "Output directory");
  app.add_option("--log-level", g.log_level, "debug|info|warn|error");

  auto* make_synth = app.add_subcommand("make-synthetic", "Write a synthetic nested-shell dataset");

  auto* prepare = app.add_subcommand("prepare", "Voxelize shapes and compute ground-truth UDFs");
  std::string input_dir_flag;
  prepare->add_option("--input", input_dir_flag, "Shape directory (overrides data.input_dir)");

  auto* train_vq = app.add_subcommand("train-vqudf", "Train the first-stage autoencoder");
  std::string dataset_dir = "dataset";
  train_vq->add_option("--dataset", dataset_dir, "Prepared dataset directory");

  auto* tokenize = app.add_subcommand("tokenize", "Encode a prepared dataset into token sequences");
  std::string vq_ckpt = "out/vqudf.ckpt";
  tokenize->add_option("--dataset", dataset_dir, "Prepared dataset directory");
  tokenize->add_option("--vqudf", vq_ckpt, "VQUDF checkpoint");

  auto* train_tf = app.add_subcommand("train-transformer", "Train the latent transformer");
  std::string tokens_path = "out/tokens.tok";
  train_tf->add_option("--tokens", tokens_path, "Token dataset (TOK1)");

  auto* generate = app.add_subcommand("generate", "Sample shapes and extract point clouds");
  std::string tf_ckpt = "out/transformer.ckpt";
  int gen_count = 8;
  generate->add_option("--vqudf", vq_ckpt, "VQUDF checkpoint");
  generate->add_option("--transformer", tf_ckpt, "Transformer checkpoint");
  generate->add_option("--count", gen_count, "Number of shapes to generate");

  auto* reconstruct = app.add_subcommand("reconstruct", "Autoencode one shape back to a cloud");
  std::string shape_path;
  reconstruct->add_option("--vqudf", vq_ckpt, "VQUDF checkpoint");
  reconstruct->add_option("--shape", shape_path, "Input shape file")->required();

  auto* evaluate = app.add_subcommand("evaluate", "MMD/COV/JSD report for two cloud sets");
  std::string generated_dir, reference_dir, report_path = "report.json";
  evaluate->add_option("--generated", generated_dir, "Generated cloud directory")->required();
  evaluate->add_option("--reference", reference_dir, "Reference cloud directory")->required();
  evaluate->add_option("--report", report_path, "Report output path");

  CLI11_PARSE(app, argc, argv);

  try {
    ff::log_level() = ff::parse_log_level(g.log_level);
    ff::RunConfig cfg = load_config(g);
    std::filesystem::path out(g.out_dir);

    if (make_synth->parsed()) {
      ff::cmd_make_synthetic(cfg, out);
    } else if (prepare->parsed()) {
      if (!input_dir_flag.empty()) cfg.data.input_dir = input_dir_flag;
      ff::cmd_prepare(cfg, out);
    } else if (train_vq->parsed()) {
      ff::cmd_train_vqudf(cfg, dataset_dir, out);
    } else if (tokenize->parsed()) {
      ff::cmd_tokenize(cfg, dataset_dir, vq_ckpt, out);
    } else if (train_tf->parsed()) {
      ff::cmd_train_transformer(cfg, tokens_path, out);
    } else if (generate->parsed()) {
      ff::cmd_generate(cfg, vq_ckpt, tf_ckpt, gen_count, out);
    } else if (reconstruct->parsed()) {
      ff::cmd_reconstruct(cfg, vq_ckpt, shape_path, out);
    } else if (evaluate->parsed()) {
      ff::cmd_evaluate(cfg, generated_dir, reference_dir, report_path);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
