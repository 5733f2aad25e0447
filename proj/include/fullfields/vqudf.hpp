#pragma once

#include <deque>
#include <filesystem>
#include <json.hpp>
#include <stdexcept>
#include <string>
#include <vector>

#include "fullfields/checkpoint.hpp"
#include "fullfields/nn.hpp"
#include "fullfields/tensor.hpp"
#include "fullfields/udf_data.hpp"
#include "fullfields/voxel.hpp"

namespace ff {

using TokenSequence = std::vector<int>;

// ---------------------------------------------------------------------------
// Configs
// ---------------------------------------------------------------------------

struct EncoderConfig {
  int input_resolution = 32;
  std::vector<int> channels_per_scale = {16, 32, 16};
  int latent_resolution = 8;  // K

  int num_scales() const { return int(channels_per_scale.size()); }
  int latent_channels() const {
    int c = 0;
    for (int ch : channels_per_scale) c += ch;
    return c;
  }

  void validate() const {
    if (input_resolution < 2) throw std::invalid_argument("encoder: input_resolution < 2");
    if (channels_per_scale.empty()) throw std::invalid_argument("encoder: no scales");
    for (int c : channels_per_scale)
      if (c < 1) throw std::invalid_argument("encoder: channel count < 1");
    int res = input_resolution;
    for (int s = 1; s < num_scales(); ++s) {
      if (res % 2 != 0) throw std::invalid_argument("encoder: resolution not divisible by 2^scales");
      res /= 2;
    }
    if (latent_resolution < 2 || latent_resolution > input_resolution)
      throw std::invalid_argument("encoder: latent_resolution out of range");
  }
};

struct DecoderConfig {
  std::vector<int> hidden_widths = {128, 128, 128};
  enum class Activation { softplus, relu };
  Activation output_activation = Activation::softplus;
  double clamp = 0.1;
};

struct VqudfConfig {
  EncoderConfig encoder;
  int codebook_size = 64;  // V
  DecoderConfig decoder;
  double beta = 1.0;

  void validate() const {
    encoder.validate();
    if (codebook_size < 2) throw std::invalid_argument("codebook_size must be >= 2");
    if (decoder.clamp <= 0.0) throw std::invalid_argument("decoder clamp must be > 0");
    for (int h : decoder.hidden_widths)
      if (h < 1) throw std::invalid_argument("decoder hidden width < 1");
  }
};

// ---------------------------------------------------------------------------
// Latent grid and codebook
// ---------------------------------------------------------------------------

// K^3 feature slices of dimension C, cell-major with spatial index
// (x*K + y)*K + z. Rows of `values` are the slices z_i.
struct LatentGrid {
  int resolution = 0;  // K
  int channels = 0;    // C
  std::vector<double> values;
  bool quantized = false;

  long cells() const { return long(resolution) * resolution * resolution; }
  MatMap mat() { return MatMap(values.data(), cells(), channels); }
  ConstMatMap mat() const { return ConstMatMap(values.data(), cells(), channels); }

  static LatentGrid zeros(int K, int C, bool quantized = false) {
    LatentGrid g;
    g.resolution = K;
    g.channels = C;
    g.quantized = quantized;
    g.values.assign(size_t(K) * K * K * C, 0.0);
    return g;
  }
};

struct Codebook {
  Tensor entries;  // [V x n_z]

  Codebook() = default;
  Codebook(int vocab, int code_dim) : entries("codebook.entries", {size_t(vocab), size_t(code_dim)}) {}

  int vocab_size() const { return int(entries.rows()); }
  int code_dim() const { return int(entries.cols()); }

  void init(Rng& rng) {
    double r = 1.0 / double(vocab_size());
    entries.fill_uniform(rng, -r, r);
  }
};

struct QuantizeResult {
  LatentGrid grid;  // quantized
  TokenSequence tokens;
};

// Nearest codebook entry per slice, Euclidean, ties to the lowest index.
// Token i is the code index of cell i in row-major cell order.
inline QuantizeResult quantize(const LatentGrid& z, const Codebook& book) {
  if (z.quantized) throw std::invalid_argument("quantize: input grid is already quantized");
  if (z.channels != book.code_dim())
    throw std::invalid_argument("quantize: latent channels " + std::to_string(z.channels) +
                                " != code dim " + std::to_string(book.code_dim()));
  const long n = z.cells();
  const int C = z.channels;
  const int V = book.vocab_size();

  QuantizeResult out;
  out.grid = LatentGrid::zeros(z.resolution, C, /*quantized=*/true);
  out.tokens.resize(size_t(n));

  const double* zp = z.values.data();
  const double* bp = book.entries.v.data();
  for (long i = 0; i < n; ++i) {
    const double* zi = zp + i * C;
    for (int c = 0; c < C; ++c)
      if (!std::isfinite(zi[c]))
        throw std::invalid_argument("quantize: non-finite latent slice at cell " +
                                    std::to_string(i));
    double best = std::numeric_limits<double>::max();
    int best_j = 0;
    for (int j = 0; j < V; ++j) {
      const double* bj = bp + long(j) * C;
      double d = 0.0;
      for (int c = 0; c < C; ++c) {
        double diff = zi[c] - bj[c];
        d += diff * diff;
      }
      if (d < best) {
        best = d;
        best_j = j;
      }
    }
    out.tokens[size_t(i)] = best_j;
    std::copy(bp + long(best_j) * C, bp + long(best_j + 1) * C,
              out.grid.values.data() + i * C);
  }
  return out;
}

inline LatentGrid dequantize(const TokenSequence& tokens, const Codebook& book, int K) {
  const long n = long(K) * K * K;
  if (long(tokens.size()) != n)
    throw std::invalid_argument("dequantize: expected " + std::to_string(n) + " tokens, got " +
                                std::to_string(tokens.size()));
  const int C = book.code_dim();
  LatentGrid g = LatentGrid::zeros(K, C, /*quantized=*/true);
  for (long i = 0; i < n; ++i) {
    int t = tokens[size_t(i)];
    if (t < 0 || t >= book.vocab_size())
      throw std::invalid_argument("dequantize: token " + std::to_string(t) + " at position " +
                                  std::to_string(i) + " outside [0, " +
                                  std::to_string(book.vocab_size()) + ")");
    std::copy(book.entries.v.data() + long(t) * C, book.entries.v.data() + long(t + 1) * C,
              g.values.data() + i * C);
  }
  return g;
}

// ---------------------------------------------------------------------------
// Multi-scale voxel encoder: strided conv stages, every stage output resized
// to the latent resolution by trilinear interpolation and concatenated along
// channels.
// ---------------------------------------------------------------------------

class VoxelEncoder {
 public:
  VoxelEncoder() = default;

  explicit VoxelEncoder(const EncoderConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    int in_ch = 1;
    int res = cfg_.input_resolution;
    for (int s = 0; s < cfg_.num_scales(); ++s) {
      int stride = s == 0 ? 1 : 2;
      convs_.emplace_back("encoder.stage" + std::to_string(s), in_ch,
                          cfg_.channels_per_scale[s], 3, stride, 1);
      res = convs_.back().out_resolution(res);
      stage_res_.push_back(res);
      in_ch = cfg_.channels_per_scale[s];
    }
  }

  void init(Rng& rng) {
    for (auto& c : convs_) {
      double fan_in = double(c.W.cols());
      c.init(rng, std::sqrt(2.0 / fan_in));
    }
  }

  const EncoderConfig& config() const { return cfg_; }

  LatentGrid forward(const VoxelGrid& grid) {
    if (grid.resolution != cfg_.input_resolution)
      throw std::invalid_argument("encode: grid resolution " + std::to_string(grid.resolution) +
                                  " != configured input resolution " +
                                  std::to_string(cfg_.input_resolution));
    const long n_in = long(grid.occupancy.size());
    MatrixRM x(1, n_in);
    for (long i = 0; i < n_in; ++i) x(0, i) = double(grid.occupancy[size_t(i)]);

    const int K = cfg_.latent_resolution;
    const int C = cfg_.latent_channels();
    pre_acts_.clear();
    acts_.clear();
    MatrixRM concat(C, long(K) * K * K);
    int row0 = 0;
    int res = cfg_.input_resolution;
    for (size_t s = 0; s < convs_.size(); ++s) {
      MatrixRM pre = convs_[s].forward(s == 0 ? x : acts_.back(), res);
      MatrixRM act = pre.unaryExpr([](double v) { return relu(v); });
      res = stage_res_[s];
      concat.middleRows(row0, act.rows()) = trilinear_resize(act, res, K);
      row0 += int(act.rows());
      pre_acts_.push_back(std::move(pre));
      acts_.push_back(std::move(act));
    }

    LatentGrid out = LatentGrid::zeros(K, C);
    MatMap(out.values.data(), long(K) * K * K, C) = concat.transpose();
    return out;
  }

  // dZ is [K^3 x C]; accumulates conv parameter grads.
  void backward(const LatentGrid& dz) {
    const int K = cfg_.latent_resolution;
    MatrixRM dconcat = ConstMatMap(dz.values.data(), dz.cells(), dz.channels).transpose();

    // Resize-branch grads per stage.
    std::vector<MatrixRM> dact(convs_.size());
    int row0 = 0;
    for (size_t s = 0; s < convs_.size(); ++s) {
      int ch = cfg_.channels_per_scale[s];
      dact[s] = trilinear_resize_backward(dconcat.middleRows(row0, ch), stage_res_[s], K);
      row0 += ch;
    }
    // Conv-chain grads, deepest stage first.
    for (int s = int(convs_.size()) - 1; s >= 0; --s) {
      MatrixRM dpre =
          dact[size_t(s)].cwiseProduct(pre_acts_[size_t(s)].unaryExpr([](double v) {
            return relu_grad(v);
          }));
      MatrixRM dx = convs_[size_t(s)].backward(dpre, /*need_dx=*/s > 0);
      if (s > 0) dact[size_t(s) - 1] += dx;
    }
  }

  std::vector<Tensor*> parameters() {
    std::vector<Tensor*> ps;
    for (auto& c : convs_) {
      ps.push_back(&c.W);
      ps.push_back(&c.b);
    }
    return ps;
  }

 private:
  EncoderConfig cfg_;
  std::vector<Conv3d> convs_;
  std::vector<int> stage_res_;
  std::vector<MatrixRM> pre_acts_, acts_;
};

// ---------------------------------------------------------------------------
// Implicit UDF decoder: trilinear sample of the quantized grid at p,
// concatenated with p, through an MLP into a non-negative distance.
// ---------------------------------------------------------------------------

class UdfDecoder {
 public:
  UdfDecoder() = default;

  UdfDecoder(int latent_channels, const DecoderConfig& cfg) : C_(latent_channels), cfg_(cfg) {
    int in_dim = C_ + 3;
    for (size_t l = 0; l < cfg_.hidden_widths.size(); ++l) {
      layers_.emplace_back("decoder.fc" + std::to_string(l), in_dim, cfg_.hidden_widths[l]);
      in_dim = cfg_.hidden_widths[l];
    }
    layers_.emplace_back("decoder.out", in_dim, 1);
  }

  void init(Rng& rng) {
    for (size_t l = 0; l + 1 < layers_.size(); ++l)
      layers_[l].init(rng, std::sqrt(2.0 / double(layers_[l].in_dim())));
    Linear& head = layers_.back();
    head.init(rng, 1.0 / std::sqrt(double(head.in_dim())));
    // Start near the clamp so early descent is not dominated by the bias.
    head.b.v[0] = cfg_.output_activation == DecoderConfig::Activation::softplus
                      ? std::log(std::expm1(cfg_.clamp))
                      : cfg_.clamp;
  }

  const DecoderConfig& config() const { return cfg_; }
  int latent_channels() const { return C_; }

  // Inference path; no caches. Points must lie in the unit cube.
  std::vector<double> evaluate(const LatentGrid& zq, const std::vector<Vec3>& points) const {
    MatrixRM x = gather_inputs(zq, points, nullptr);
    for (size_t l = 0; l < layers_.size(); ++l) {
      x = layers_[l].forward(x);
      if (l + 1 < layers_.size()) x = x.unaryExpr([](double v) { return relu(v); });
    }
    std::vector<double> out(points.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = activate(x(long(i), 0));
    return out;
  }

  // Training path; caches activations for backward.
  std::vector<double> forward(const LatentGrid& zq, const std::vector<Vec3>& points) {
    taps_.clear();
    inputs_.clear();
    pre_acts_.clear();
    MatrixRM x = gather_inputs(zq, points, &taps_);
    for (size_t l = 0; l < layers_.size(); ++l) {
      inputs_.push_back(x);
      MatrixRM pre = layers_[l].forward(x);
      if (l + 1 < layers_.size()) {
        x = pre.unaryExpr([](double v) { return relu(v); });
        pre_acts_.push_back(std::move(pre));
      } else {
        pre_acts_.push_back(pre);
        x = std::move(pre);
      }
    }
    raw_ = std::move(x);
    std::vector<double> out(points.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = activate(raw_(long(i), 0));
    return out;
  }

  // Accumulates parameter grads; returns grad wrt the quantized grid.
  LatentGrid backward(const std::vector<double>& dout, const LatentGrid& zq) {
    const long n = raw_.rows();
    MatrixRM d = MatrixRM(n, 1);
    for (long i = 0; i < n; ++i) d(i, 0) = dout[size_t(i)] * activate_grad(raw_(i, 0));
    for (int l = int(layers_.size()) - 1; l >= 0; --l) {
      if (l + 1 < int(layers_.size()))
        d = d.cwiseProduct(pre_acts_[size_t(l)].unaryExpr([](double v) { return relu_grad(v); }));
      d = layers_[size_t(l)].backward(inputs_[size_t(l)], d);
    }
    LatentGrid dzq = LatentGrid::zeros(zq.resolution, zq.channels, true);
    MatMap dzq_m = dzq.mat();
    for (long i = 0; i < n; ++i) {
      const PointTaps& t = taps_[size_t(i)];
      for (int c = 0; c < 8; ++c)
        dzq_m.row(t.cell[size_t(c)]) += t.w[size_t(c)] * d.row(i).head(C_);
    }
    return dzq;
  }

  std::vector<Tensor*> parameters() {
    std::vector<Tensor*> ps;
    for (auto& l : layers_) {
      ps.push_back(&l.W);
      ps.push_back(&l.b);
    }
    return ps;
  }

 private:
  double activate(double v) const {
    return cfg_.output_activation == DecoderConfig::Activation::softplus ? softplus(v) : relu(v);
  }
  double activate_grad(double v) const {
    return cfg_.output_activation == DecoderConfig::Activation::softplus ? softplus_grad(v)
                                                                         : relu_grad(v);
  }

  MatrixRM gather_inputs(const LatentGrid& zq, const std::vector<Vec3>& points,
                         std::vector<PointTaps>* taps) const {
    if (!zq.quantized) throw std::invalid_argument("decode_udf: latent grid is not quantized");
    if (zq.channels != C_)
      throw std::invalid_argument("decode_udf: latent channels " + std::to_string(zq.channels) +
                                  " != decoder channels " + std::to_string(C_));
    MatrixRM x(long(points.size()), C_ + 3);
    ConstMatMap grid = zq.mat();
    for (size_t i = 0; i < points.size(); ++i) {
      const Vec3& p = points[i];
      if (!in_unit_cube(p, 1e-9))
        throw std::invalid_argument("decode_udf: point " + std::to_string(i) +
                                    " outside [-0.5, 0.5]^3");
      PointTaps t = point_taps(p, zq.resolution);
      Eigen::RowVectorXd feat = Eigen::RowVectorXd::Zero(C_);
      for (int c = 0; c < 8; ++c) feat += t.w[size_t(c)] * grid.row(t.cell[size_t(c)]);
      x.row(long(i)).head(C_) = feat;
      x(long(i), C_) = p.x;
      x(long(i), C_ + 1) = p.y;
      x(long(i), C_ + 2) = p.z;
      if (taps) taps->push_back(t);
    }
    return x;
  }

  int C_ = 0;
  DecoderConfig cfg_;
  std::vector<Linear> layers_;
  // training caches
  std::vector<PointTaps> taps_;
  std::vector<MatrixRM> inputs_, pre_acts_;
  MatrixRM raw_;
};

// ---------------------------------------------------------------------------
// Loss: mean squared UDF error plus the two stop-gradient quantization terms
// (mean over grid elements), the encoder commitment weighted by beta.
// ---------------------------------------------------------------------------

struct VqudfLossTerms {
  double reconstruction = 0.0;
  double dictionary = 0.0;  // || sg[z] - zq ||^2 -> codebook
  double commitment = 0.0;  // || sg[zq] - z ||^2 -> encoder
  double total = 0.0;

  std::vector<double> d_pred;      // dL/dpred
  std::vector<double> d_z_commit;  // commitment grad wrt z
  std::vector<double> d_zq_dict;   // dictionary grad wrt zq (routes to codebook entries)
};

inline VqudfLossTerms vqudf_loss(const std::vector<double>& pred, const UdfSampleSet& target,
                                 const LatentGrid& z, const LatentGrid& zq, double beta) {
  if (pred.size() != target.distances.size())
    throw std::invalid_argument("vqudf_loss: " + std::to_string(pred.size()) +
                                " predictions vs " + std::to_string(target.distances.size()) +
                                " targets");
  if (z.values.size() != zq.values.size())
    throw std::invalid_argument("vqudf_loss: z and zq shapes differ");

  VqudfLossTerms out;
  const size_t n = pred.size();
  out.d_pred.resize(n);
  for (size_t i = 0; i < n; ++i) {
    double e = pred[i] - target.distances[i];
    out.reconstruction += e * e;
    out.d_pred[i] = 2.0 * e / double(n);
  }
  if (n > 0) out.reconstruction /= double(n);

  const size_t m = z.values.size();
  out.d_z_commit.resize(m);
  out.d_zq_dict.resize(m);
  for (size_t i = 0; i < m; ++i) {
    double diff = zq.values[i] - z.values[i];  // sg-free difference
    out.dictionary += diff * diff;
    out.commitment += diff * diff;
    out.d_zq_dict[i] = 2.0 * diff / double(m);
    out.d_z_commit[i] = beta * 2.0 * (z.values[i] - zq.values[i]) / double(m);
  }
  out.dictionary /= double(m);
  out.commitment /= double(m);
  out.total = out.reconstruction + out.dictionary + beta * out.commitment;
  return out;
}

// ---------------------------------------------------------------------------
// Full first-stage model and its training loop
// ---------------------------------------------------------------------------

struct VqudfStepStats {
  double reconstruction = 0.0;
  double quantization = 0.0;  // dictionary + beta * commitment
  double total = 0.0;
  TokenSequence tokens;
};

// Optional capture of the straight-through buffers, for tests.
struct StraightThroughProbe {
  std::vector<double> d_zq_reconstruction;
  std::vector<double> d_z_reconstruction;
};

class VqudfModel {
 public:
  VqudfModel(const VqudfConfig& cfg, uint64_t seed) : cfg_(cfg), encoder_(cfg.encoder),
        codebook_(cfg.codebook_size, cfg.encoder.latent_channels()),
        decoder_(cfg.encoder.latent_channels(), cfg.decoder) {
    cfg_.validate();
    Rng rng(splitmix64(seed ^ 0x76717564ULL));  // init stream
    encoder_.init(rng);
    codebook_.init(rng);
    decoder_.init(rng);
  }

  const VqudfConfig& config() const { return cfg_; }
  VoxelEncoder& encoder() { return encoder_; }
  Codebook& codebook() { return codebook_; }
  const Codebook& codebook() const { return codebook_; }
  UdfDecoder& decoder() { return decoder_; }
  const UdfDecoder& decoder() const { return decoder_; }

  LatentGrid encode(const VoxelGrid& grid) { return encoder_.forward(grid); }

  QuantizeResult encode_and_quantize(const VoxelGrid& grid) {
    return ff::quantize(encoder_.forward(grid), codebook_);
  }

  std::vector<double> decode(const LatentGrid& zq, const std::vector<Vec3>& points) const {
    return decoder_.evaluate(zq, points);
  }

  std::vector<Tensor*> parameters() {
    std::vector<Tensor*> ps = encoder_.parameters();
    ps.push_back(&codebook_.entries);
    auto dec = decoder_.parameters();
    ps.insert(ps.end(), dec.begin(), dec.end());
    return ps;
  }

  // One forward/backward pass over a (grid, samples) pair. Accumulates
  // parameter grads; the caller owns optimizer stepping and grad zeroing.
  VqudfStepStats accumulate_gradients(const VoxelGrid& grid, const std::vector<Vec3>& points,
                                      const UdfSampleSet& targets,
                                      StraightThroughProbe* probe = nullptr) {
    LatentGrid z = encoder_.forward(grid);
    QuantizeResult q = ff::quantize(z, codebook_);
    std::vector<double> pred = decoder_.forward(q.grid, points);

    VqudfLossTerms loss = vqudf_loss(pred, targets, z, q.grid, cfg_.beta);

    // Reconstruction gradient into the quantized grid...
    LatentGrid d_zq = decoder_.backward(loss.d_pred, q.grid);
    // ...copied verbatim onto the continuous grid (straight-through), plus
    // the commitment pull. The codebook sees only the dictionary term.
    LatentGrid d_z = d_zq;
    d_z.quantized = false;
    if (probe) {
      probe->d_zq_reconstruction = d_zq.values;
      probe->d_z_reconstruction = d_z.values;
    }
    for (size_t i = 0; i < d_z.values.size(); ++i) d_z.values[i] += loss.d_z_commit[i];
    encoder_.backward(d_z);

    const int C = codebook_.code_dim();
    MatMap book_grad = codebook_.entries.grad_mat();
    ConstMatMap d_dict(loss.d_zq_dict.data(), q.grid.cells(), C);
    for (long i = 0; i < q.grid.cells(); ++i)
      book_grad.row(q.tokens[size_t(i)]) += d_dict.row(i);

    VqudfStepStats stats;
    stats.reconstruction = loss.reconstruction;
    stats.quantization = loss.dictionary + cfg_.beta * loss.commitment;
    stats.total = loss.total;
    stats.tokens = std::move(q.tokens);
    return stats;
  }

 private:
  VqudfConfig cfg_;
  VoxelEncoder encoder_;
  Codebook codebook_;
  UdfDecoder decoder_;
};

struct VqudfTrainOptions {
  size_t steps = 3000;
  double lr = 1e-3;
  size_t queries_per_step = 2048;
  uint64_t seed = 1;
  size_t dead_code_patience = 200;  // steps an entry may stay unused
  size_t log_every = 1;
};

struct LossCurvePoint {
  size_t step = 0;
  double reconstruction = 0.0;
  double quantization = 0.0;
  double total = 0.0;
};

struct VqudfTrainResult {
  std::vector<LossCurvePoint> curve;
};

// Joint training of encoder, codebook, decoder. Walks the dataset cyclically
// (batch of one shape, as in the reference setup) with a seeded query
// subsample per step. Dead codebook entries are re-seeded from recent encoder
// output slices.
inline VqudfTrainResult train_vqudf(VqudfModel& model,
                                    const std::vector<std::pair<VoxelGrid, UdfSampleSet>>& dataset,
                                    const VqudfTrainOptions& opt) {
  if (dataset.empty()) throw std::invalid_argument("train_vqudf: empty dataset");
  for (const auto& [grid, samples] : dataset)
    if (samples.size() == 0) throw std::invalid_argument("train_vqudf: shape without UDF samples");

  Rng rng(splitmix64(opt.seed ^ 0x747261696eULL));
  Adam adam(opt.lr);
  std::vector<Tensor*> params = model.parameters();

  const int V = model.codebook().vocab_size();
  const int C = model.codebook().code_dim();
  std::vector<size_t> unused_for(size_t(V), 0);
  std::vector<double> slice_reservoir;  // recent encoder slices, ring of 64
  size_t reservoir_pos = 0;
  const size_t reservoir_cap = 64;

  VqudfTrainResult result;
  result.curve.reserve(opt.steps);

  for (size_t step = 0; step < opt.steps; ++step) {
    const auto& [grid, samples] = dataset[step % dataset.size()];

    size_t batch = std::min(opt.queries_per_step, samples.size());
    std::vector<Vec3> points(batch);
    UdfSampleSet targets;
    targets.clamp_value = samples.clamp_value;
    targets.distances.resize(batch);
    for (size_t i = 0; i < batch; ++i) {
      size_t k = size_t(rng.uniform_index(samples.size()));
      points[i] = samples.points[k];
      targets.distances[i] = samples.distances[k];
    }
    targets.points = points;

    zero_grads(params);
    VqudfStepStats stats = model.accumulate_gradients(grid, points, targets);
    if (!std::isfinite(stats.total))
      throw std::runtime_error("train_vqudf: loss diverged to non-finite at step " +
                               std::to_string(step) + " (recon=" +
                               std::to_string(stats.reconstruction) + ")");
    adam.step(params);

    // Dead-code bookkeeping.
    std::vector<uint8_t> used(size_t(V), 0);
    for (int t : stats.tokens) used[size_t(t)] = 1;
    // Stash a few slices from this step's continuous grid for re-seeding.
    {
      LatentGrid z = model.encode(grid);
      for (int k = 0; k < 4; ++k) {
        long cell = long(rng.uniform_index(uint64_t(z.cells())));
        if (slice_reservoir.size() < reservoir_cap * size_t(C))
          slice_reservoir.insert(slice_reservoir.end(), z.values.begin() + cell * C,
                                 z.values.begin() + (cell + 1) * C);
        else {
          std::copy(z.values.begin() + cell * C, z.values.begin() + (cell + 1) * C,
                    slice_reservoir.begin() + long(reservoir_pos) * C);
          reservoir_pos = (reservoir_pos + 1) % reservoir_cap;
        }
      }
    }
    size_t reservoir_rows = slice_reservoir.size() / size_t(C);
    for (int j = 0; j < V; ++j) {
      if (used[size_t(j)]) {
        unused_for[size_t(j)] = 0;
        continue;
      }
      if (++unused_for[size_t(j)] >= opt.dead_code_patience && reservoir_rows > 0) {
        size_t row = size_t(rng.uniform_index(reservoir_rows));
        std::copy(slice_reservoir.begin() + long(row) * C,
                  slice_reservoir.begin() + long(row + 1) * C,
                  model.codebook().entries.v.begin() + long(j) * C);
        unused_for[size_t(j)] = 0;
      }
    }

    if (step % opt.log_every == 0 || step + 1 == opt.steps)
      result.curve.push_back({step, stats.reconstruction, stats.quantization, stats.total});
  }
  return result;
}

// ---------------------------------------------------------------------------
// Checkpointing ("vqudf/1")
// ---------------------------------------------------------------------------

inline nlohmann::json vqudf_config_json(const VqudfConfig& cfg) {
  return {
      {"encoder",
       {{"input_resolution", cfg.encoder.input_resolution},
        {"channels_per_scale", cfg.encoder.channels_per_scale},
        {"latent_resolution", cfg.encoder.latent_resolution}}},
      {"codebook_size", cfg.codebook_size},
      {"decoder",
       {{"hidden_widths", cfg.decoder.hidden_widths},
        {"output_activation",
         cfg.decoder.output_activation == DecoderConfig::Activation::softplus ? "softplus"
                                                                              : "relu"},
        {"clamp", cfg.decoder.clamp}}},
      {"beta", cfg.beta},
  };
}

inline VqudfConfig vqudf_config_from_json(const nlohmann::json& j) {
  VqudfConfig cfg;
  cfg.encoder.input_resolution = j.at("encoder").at("input_resolution").get<int>();
  cfg.encoder.channels_per_scale =
      j.at("encoder").at("channels_per_scale").get<std::vector<int>>();
  cfg.encoder.latent_resolution = j.at("encoder").at("latent_resolution").get<int>();
  cfg.codebook_size = j.at("codebook_size").get<int>();
  cfg.decoder.hidden_widths = j.at("decoder").at("hidden_widths").get<std::vector<int>>();
  cfg.decoder.output_activation = j.at("decoder").at("output_activation").get<std::string>() ==
                                          "relu"
                                      ? DecoderConfig::Activation::relu
                                      : DecoderConfig::Activation::softplus;
  cfg.decoder.clamp = j.at("decoder").at("clamp").get<double>();
  cfg.beta = j.at("beta").get<double>();
  cfg.validate();
  return cfg;
}

inline void save_vqudf_checkpoint(const std::filesystem::path& path, VqudfModel& model,
                                  const nlohmann::json& run_metadata = {}) {
  nlohmann::json cfg = vqudf_config_json(model.config());
  if (!run_metadata.is_null() && !run_metadata.empty()) cfg["run"] = run_metadata;
  std::vector<const Tensor*> tensors;
  for (Tensor* t : model.parameters()) tensors.push_back(t);
  save_checkpoint(path, "vqudf/1", cfg, tensors);
}

inline VqudfModel load_vqudf_checkpoint(const std::filesystem::path& path) {
  CheckpointData ck = load_checkpoint(path, "vqudf/1");
  VqudfModel model(vqudf_config_from_json(ck.config), /*seed=*/0);
  restore_tensors(ck, model.parameters());
  return model;
}

}  // namespace ff
