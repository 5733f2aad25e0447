#pragma once

#include <algorithm>
#include <filesystem>
#include <json.hpp>
#include <stdexcept>
#include <string>
#include <vector>

#include "fullfields/checkpoint.hpp"
#include "fullfields/nn.hpp"
#include "fullfields/tensor.hpp"

namespace ff {

using TokenSequenceT = std::vector<int>;

struct TransformerConfig {
  int layers = 2;
  int heads = 2;
  int embed_dim = 64;
  int context_length = 513;  // K^3 + 1 for the BOS slot
  int vocab_size = 65;       // payload vocabulary V plus BOS

  int bos_token() const { return vocab_size - 1; }
  int payload_vocab() const { return vocab_size - 1; }

  void validate() const {
    if (layers < 1 || heads < 1) throw std::invalid_argument("transformer: layers/heads < 1");
    if (embed_dim % heads != 0)
      throw std::invalid_argument("transformer: embed_dim not divisible by heads");
    if (context_length < 2) throw std::invalid_argument("transformer: context_length < 2");
    if (vocab_size < 3) throw std::invalid_argument("transformer: vocab_size < 3");
  }
};

struct SamplerConfig {
  double temperature = 1.0;
  int top_k = 0;  // 0 disables the filter
  uint64_t seed = 0;

  void validate(int payload_vocab) const {
    if (temperature <= 0.0) throw std::invalid_argument("sampler: temperature must be > 0");
    if (top_k < 0 || top_k > payload_vocab)
      throw std::invalid_argument("sampler: top_k outside [1, vocab]");
  }
};

namespace detail_tf {

// Per-row layer norm; caches mean and reciprocal std for backward.
struct NormCache {
  MatrixRM out;
  Eigen::VectorXd mean, rstd;
};

inline NormCache layernorm(const MatrixRM& x, const Tensor& g, const Tensor& b) {
  constexpr double eps = 1e-5;
  NormCache c;
  const long T = x.rows(), E = x.cols();
  c.out.resize(T, E);
  c.mean.resize(T);
  c.rstd.resize(T);
  ConstVecMap gv(g.v.data(), E), bv(b.v.data(), E);
  for (long t = 0; t < T; ++t) {
    double mu = x.row(t).mean();
    double var = (x.row(t).array() - mu).square().mean();
    double rstd = 1.0 / std::sqrt(var + eps);
    c.mean(t) = mu;
    c.rstd(t) = rstd;
    c.out.row(t) =
        (((x.row(t).array() - mu) * rstd) * gv.transpose().array() + bv.transpose().array());
  }
  return c;
}

inline MatrixRM layernorm_backward(const MatrixRM& dy, const MatrixRM& x, const NormCache& c,
                                   Tensor& g, Tensor& b) {
  const long T = x.rows(), E = x.cols();
  MatrixRM dx(T, E);
  ConstVecMap gv(g.v.data(), E);
  VecMap dg(g.g.data(), E), db(b.g.data(), E);
  for (long t = 0; t < T; ++t) {
    Eigen::ArrayXd xhat = (x.row(t).array() - c.mean(t)) * c.rstd(t);
    Eigen::ArrayXd dyg = dy.row(t).transpose().array() * gv.array();
    double m1 = dyg.mean();
    double m2 = (dyg * xhat).mean();
    dx.row(t) = (c.rstd(t) * (dyg - m1 - xhat * m2)).transpose();
    dg.array() += dy.row(t).transpose().array() * xhat;
    db.array() += dy.row(t).transpose().array();
  }
  return dx;
}

}  // namespace detail_tf

// Decoder-only autoregressive model over codebook indices. Pre-norm blocks,
// learned absolute positions, untied output head. The BOS token occupies the
// last vocabulary slot and is masked out of every emitted distribution, so
// probabilities live on the payload vocabulary alone.
class LatentTransformer {
 public:
  LatentTransformer(const TransformerConfig& cfg, uint64_t seed)
      : cfg_(cfg),
        tok_emb_("tok_emb", {size_t(cfg.vocab_size), size_t(cfg.embed_dim)}),
        pos_emb_("pos_emb", {size_t(cfg.context_length), size_t(cfg.embed_dim)}),
        lnf_g_("lnf.weight", {size_t(cfg.embed_dim)}),
        lnf_b_("lnf.bias", {size_t(cfg.embed_dim)}),
        head_("head", cfg.embed_dim, cfg.vocab_size) {
    cfg_.validate();
    const int E = cfg.embed_dim;
    for (int l = 0; l < cfg.layers; ++l) {
      std::string p = "block" + std::to_string(l) + ".";
      blocks_.push_back(Block{
          Tensor(p + "ln1.weight", {size_t(E)}), Tensor(p + "ln1.bias", {size_t(E)}),
          Linear(p + "attn.qkv", E, 3 * E), Linear(p + "attn.proj", E, E),
          Tensor(p + "ln2.weight", {size_t(E)}), Tensor(p + "ln2.bias", {size_t(E)}),
          Linear(p + "mlp.fc", E, 4 * E), Linear(p + "mlp.proj", 4 * E, E)});
    }
    init(seed);
  }

  const TransformerConfig& config() const { return cfg_; }

  std::vector<Tensor*> parameters() {
    std::vector<Tensor*> ps{&tok_emb_, &pos_emb_};
    for (auto& b : blocks_) {
      ps.push_back(&b.ln1_g);
      ps.push_back(&b.ln1_b);
      ps.push_back(&b.qkv.W);
      ps.push_back(&b.qkv.b);
      ps.push_back(&b.proj.W);
      ps.push_back(&b.proj.b);
      ps.push_back(&b.ln2_g);
      ps.push_back(&b.ln2_b);
      ps.push_back(&b.fc.W);
      ps.push_back(&b.fc.b);
      ps.push_back(&b.fc2.W);
      ps.push_back(&b.fc2.b);
    }
    ps.push_back(&lnf_g_);
    ps.push_back(&lnf_b_);
    ps.push_back(&head_.W);
    ps.push_back(&head_.b);
    return ps;
  }

  // Full-sequence forward; input already carries BOS at position 0.
  // Returns logits [T x vocab] and caches activations for backward.
  MatrixRM forward(const TokenSequenceT& input) {
    const long T = long(input.size());
    if (T < 1 || T > cfg_.context_length)
      throw std::invalid_argument("transformer: sequence length " + std::to_string(T) +
                                  " outside [1, " + std::to_string(cfg_.context_length) + "]");
    for (long t = 0; t < T; ++t)
      if (input[size_t(t)] < 0 || input[size_t(t)] >= cfg_.vocab_size)
        throw std::invalid_argument("transformer: token " + std::to_string(input[size_t(t)]) +
                                    " at position " + std::to_string(t) + " outside vocabulary");

    cache_.input = input;
    const int E = cfg_.embed_dim;
    MatrixRM x(T, E);
    for (long t = 0; t < T; ++t)
      x.row(t) = tok_emb_.mat().row(input[size_t(t)]) + pos_emb_.mat().row(t);

    cache_.layer.assign(blocks_.size(), LayerCache{});
    for (size_t l = 0; l < blocks_.size(); ++l) x = block_forward(blocks_[l], x, cache_.layer[l]);

    cache_.pre_lnf = x;
    cache_.lnf = detail_tf::layernorm(x, lnf_g_, lnf_b_);
    return head_.forward(cache_.lnf.out);
  }

  // Backward from dlogits; accumulates parameter grads.
  void backward(const MatrixRM& dlogits) {
    MatrixRM dx = head_.backward(cache_.lnf.out, dlogits);
    dx = detail_tf::layernorm_backward(dx, cache_.pre_lnf, cache_.lnf, lnf_g_, lnf_b_);
    for (int l = int(blocks_.size()) - 1; l >= 0; --l)
      dx = block_backward(blocks_[size_t(l)], dx, cache_.layer[size_t(l)]);
    for (long t = 0; t < dx.rows(); ++t) {
      tok_emb_.grad_mat().row(cache_.input[size_t(t)]) += dx.row(t);
      pos_emb_.grad_mat().row(t) += dx.row(t);
    }
  }

  // --- incremental decoding with a per-layer KV cache ---

  struct DecodeState {
    std::vector<MatrixRM> k, v;  // per layer, rows appended per position
    int length = 0;
  };

  DecodeState make_decode_state() const {
    DecodeState s;
    s.k.assign(blocks_.size(), MatrixRM(cfg_.context_length, cfg_.embed_dim));
    s.v.assign(blocks_.size(), MatrixRM(cfg_.context_length, cfg_.embed_dim));
    return s;
  }

  // Feeds one token, returns the logits row for the next position.
  Eigen::RowVectorXd decode_step(DecodeState& st, int token) const {
    if (st.length >= cfg_.context_length)
      throw std::invalid_argument("transformer: decode past context_length");
    if (token < 0 || token >= cfg_.vocab_size)
      throw std::invalid_argument("transformer: token outside vocabulary");
    const int E = cfg_.embed_dim, H = cfg_.heads, hd = E / H;
    const double scale = 1.0 / std::sqrt(double(hd));
    const long t = st.length;

    Eigen::RowVectorXd x = tok_emb_.mat().row(token) + pos_emb_.mat().row(t);
    for (size_t l = 0; l < blocks_.size(); ++l) {
      const Block& b = blocks_[l];
      Eigen::RowVectorXd a = norm_row(x, b.ln1_g, b.ln1_b);
      Eigen::RowVectorXd qkv =
          a * b.qkv.W.mat().transpose() + ConstVecMap(b.qkv.b.v.data(), 3 * E).transpose();
      st.k[l].row(t) = qkv.segment(E, E);
      st.v[l].row(t) = qkv.segment(2 * E, E);
      Eigen::RowVectorXd att(E);
      for (int h = 0; h < H; ++h) {
        Eigen::RowVectorXd q = qkv.segment(h * hd, hd);
        Eigen::VectorXd scores =
            (st.k[l].block(0, h * hd, t + 1, hd) * q.transpose()) * scale;
        double mx = scores.maxCoeff();
        Eigen::VectorXd p = (scores.array() - mx).exp();
        p /= p.sum();
        att.segment(h * hd, hd) = p.transpose() * st.v[l].block(0, h * hd, t + 1, hd);
      }
      x += att * b.proj.W.mat().transpose() +
           ConstVecMap(b.proj.b.v.data(), E).transpose();
      Eigen::RowVectorXd a2 = norm_row(x, b.ln2_g, b.ln2_b);
      Eigen::RowVectorXd hpre =
          a2 * b.fc.W.mat().transpose() + ConstVecMap(b.fc.b.v.data(), 4 * E).transpose();
      Eigen::RowVectorXd hact = hpre.unaryExpr([](double v) { return gelu(v); });
      x += hact * b.fc2.W.mat().transpose() + ConstVecMap(b.fc2.b.v.data(), E).transpose();
    }
    Eigen::RowVectorXd xf = norm_row(x, lnf_g_, lnf_b_);
    ++st.length;
    return xf * head_.W.mat().transpose() +
           ConstVecMap(head_.b.v.data(), cfg_.vocab_size).transpose();
  }

  // Distribution over the payload vocabulary (BOS masked out).
  std::vector<double> masked_softmax(const Eigen::RowVectorXd& logits) const {
    const int V = cfg_.payload_vocab();
    double mx = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < V; ++j) mx = std::max(mx, logits(j));
    std::vector<double> p(size_t(cfg_.vocab_size), 0.0);
    double sum = 0.0;
    for (int j = 0; j < V; ++j) {
      p[size_t(j)] = std::exp(logits(j) - mx);
      sum += p[size_t(j)];
    }
    for (int j = 0; j < V; ++j) p[size_t(j)] /= sum;
    return p;
  }

 private:
  struct Block {
    Tensor ln1_g, ln1_b;
    Linear qkv, proj;
    Tensor ln2_g, ln2_b;
    Linear fc, fc2;
  };

  struct LayerCache {
    MatrixRM x_in;                   // residual stream entering the block
    detail_tf::NormCache ln1;
    MatrixRM qkv;                    // [T x 3E]
    std::vector<MatrixRM> att_p;     // per head [T x T] softmax rows
    MatrixRM att_out;                // [T x E] concatenated heads
    MatrixRM x_mid;                  // after attention residual
    detail_tf::NormCache ln2;
    MatrixRM fc_pre;                 // [T x 4E]
    MatrixRM fc_act;
  };

  struct Cache {
    TokenSequenceT input;
    std::vector<LayerCache> layer;
    MatrixRM pre_lnf;
    detail_tf::NormCache lnf;
  };

  void init(uint64_t seed) {
    Rng rng(splitmix64(seed ^ 0x6c74ULL));
    const double s = 0.02;
    const double resid = s / std::sqrt(2.0 * cfg_.layers);
    tok_emb_.fill_normal(rng, s);
    pos_emb_.fill_normal(rng, s);
    for (auto& b : blocks_) {
      std::fill(b.ln1_g.v.begin(), b.ln1_g.v.end(), 1.0);
      std::fill(b.ln2_g.v.begin(), b.ln2_g.v.end(), 1.0);
      b.qkv.init(rng, s);
      b.proj.init(rng, resid);
      b.fc.init(rng, s);
      b.fc2.init(rng, resid);
    }
    std::fill(lnf_g_.v.begin(), lnf_g_.v.end(), 1.0);
    head_.init(rng, s);
  }

  Eigen::RowVectorXd norm_row(const Eigen::RowVectorXd& x, const Tensor& g,
                              const Tensor& b) const {
    constexpr double eps = 1e-5;
    double mu = x.mean();
    double var = (x.array() - mu).square().mean();
    double rstd = 1.0 / std::sqrt(var + eps);
    ConstVecMap gv(g.v.data(), x.size()), bv(b.v.data(), x.size());
    return (((x.array() - mu) * rstd) * gv.transpose().array() + bv.transpose().array());
  }

  MatrixRM block_forward(Block& b, const MatrixRM& x, LayerCache& c) {
    const long T = x.rows();
    const int E = cfg_.embed_dim, H = cfg_.heads, hd = E / H;
    const double scale = 1.0 / std::sqrt(double(hd));

    c.x_in = x;
    c.ln1 = detail_tf::layernorm(x, b.ln1_g, b.ln1_b);
    c.qkv = b.qkv.forward(c.ln1.out);
    c.att_p.assign(size_t(H), MatrixRM());
    c.att_out.resize(T, E);
    for (int h = 0; h < H; ++h) {
      auto q = c.qkv.block(0, h * hd, T, hd);
      auto k = c.qkv.block(0, E + h * hd, T, hd);
      auto v = c.qkv.block(0, 2 * E + h * hd, T, hd);
      MatrixRM p = MatrixRM::Zero(T, T);
      for (long i = 0; i < T; ++i) {
        Eigen::VectorXd s = (k.topRows(i + 1) * q.row(i).transpose()) * scale;
        double mx = s.maxCoeff();
        Eigen::VectorXd e = (s.array() - mx).exp();
        p.row(i).head(i + 1) = (e / e.sum()).transpose();
      }
      c.att_out.block(0, h * hd, T, hd) = p * v;
      c.att_p[size_t(h)] = std::move(p);
    }
    c.x_mid = x + b.proj.forward(c.att_out);

    c.ln2 = detail_tf::layernorm(c.x_mid, b.ln2_g, b.ln2_b);
    c.fc_pre = b.fc.forward(c.ln2.out);
    c.fc_act = c.fc_pre.unaryExpr([](double v) { return gelu(v); });
    return c.x_mid + b.fc2.forward(c.fc_act);
  }

  MatrixRM block_backward(Block& b, const MatrixRM& dy, LayerCache& c) {
    const long T = dy.rows();
    const int E = cfg_.embed_dim, H = cfg_.heads, hd = E / H;
    const double scale = 1.0 / std::sqrt(double(hd));

    // MLP branch.
    MatrixRM dact = b.fc2.backward(c.fc_act, dy);
    MatrixRM dpre =
        dact.cwiseProduct(c.fc_pre.unaryExpr([](double v) { return gelu_grad(v); }));
    MatrixRM dmid =
        dy + detail_tf::layernorm_backward(b.fc.backward(c.ln2.out, dpre), c.x_mid, c.ln2,
                                           b.ln2_g, b.ln2_b);

    // Attention branch.
    MatrixRM datt = b.proj.backward(c.att_out, dmid);
    MatrixRM dqkv = MatrixRM::Zero(T, 3 * E);
    for (int h = 0; h < H; ++h) {
      auto q = c.qkv.block(0, h * hd, T, hd);
      auto k = c.qkv.block(0, E + h * hd, T, hd);
      auto v = c.qkv.block(0, 2 * E + h * hd, T, hd);
      const MatrixRM& p = c.att_p[size_t(h)];
      auto dout = datt.block(0, h * hd, T, hd);

      MatrixRM dp = dout * v.transpose();  // [T x T]
      MatrixRM ds(T, T);
      for (long i = 0; i < T; ++i) {
        auto pi = p.row(i).head(i + 1).array();
        auto dpi = dp.row(i).head(i + 1).array();
        double dotv = (pi * dpi).sum();
        ds.row(i).setZero();
        ds.row(i).head(i + 1) = (pi * (dpi - dotv)).matrix();
      }
      dqkv.block(0, 2 * E + h * hd, T, hd) += p.transpose() * dout;
      dqkv.block(0, h * hd, T, hd) += (ds * k) * scale;
      dqkv.block(0, E + h * hd, T, hd) += (ds.transpose() * q) * scale;
    }
    MatrixRM dx =
        dmid + detail_tf::layernorm_backward(b.qkv.backward(c.ln1.out, dqkv), c.x_in, c.ln1,
                                             b.ln1_g, b.ln1_b);
    return dx;
  }

  TransformerConfig cfg_;
  Tensor tok_emb_, pos_emb_;
  std::vector<Block> blocks_;
  Tensor lnf_g_, lnf_b_;
  Linear head_;
  Cache cache_;
};

// ---------------------------------------------------------------------------
// Spec-level operations
// ---------------------------------------------------------------------------

inline void check_payload_tokens(const TokenSequenceT& seq, const TransformerConfig& cfg) {
  for (size_t i = 0; i < seq.size(); ++i)
    if (seq[i] < 0 || seq[i] >= cfg.payload_vocab())
      throw std::invalid_argument("token " + std::to_string(seq[i]) + " at position " +
                                  std::to_string(i) + " outside payload vocabulary [0, " +
                                  std::to_string(cfg.payload_vocab()) + ")");
}

// p(next | BOS, prefix) over the full vocab vector; BOS entry is zero.
inline std::vector<double> next_token_distribution(LatentTransformer& model,
                                                   const TokenSequenceT& prefix) {
  const auto& cfg = model.config();
  if (long(prefix.size()) >= cfg.context_length)
    throw std::invalid_argument("next_token_distribution: prefix length " +
                                std::to_string(prefix.size()) + " >= context_length " +
                                std::to_string(cfg.context_length));
  check_payload_tokens(prefix, cfg);
  TokenSequenceT input;
  input.reserve(prefix.size() + 1);
  input.push_back(cfg.bos_token());
  input.insert(input.end(), prefix.begin(), prefix.end());
  MatrixRM logits = model.forward(input);
  return model.masked_softmax(logits.row(logits.rows() - 1));
}

// -sum_i log p(t_i | BOS, t_<i), in nats.
inline double sequence_nll(LatentTransformer& model, const TokenSequenceT& seq) {
  const auto& cfg = model.config();
  if (long(seq.size()) > cfg.context_length - 1)
    throw std::invalid_argument("sequence_nll: sequence longer than context allows");
  check_payload_tokens(seq, cfg);
  if (seq.empty()) return 0.0;
  TokenSequenceT input;
  input.reserve(seq.size() + 1);
  input.push_back(cfg.bos_token());
  input.insert(input.end(), seq.begin(), seq.end());
  MatrixRM logits = model.forward(input);
  double nll = 0.0;
  for (size_t i = 0; i < seq.size(); ++i) {
    std::vector<double> p = model.masked_softmax(logits.row(long(i)));
    nll -= std::log(std::max(p[size_t(seq[i])], 1e-300));
  }
  return nll;
}

struct TransformerTrainOptions {
  size_t steps = 3000;
  double lr = 1e-3;
  uint64_t seed = 1;
  size_t log_every = 1;
};

struct TransformerTrainResult {
  std::vector<std::pair<size_t, double>> curve;  // (step, mean nll per token)
};

// Next-token log-likelihood training, one sequence per step, cycling through
// the dataset in order.
inline TransformerTrainResult train_transformer(LatentTransformer& model,
                                                const std::vector<TokenSequenceT>& sequences,
                                                const TransformerTrainOptions& opt) {
  if (sequences.empty()) throw std::invalid_argument("train_transformer: empty dataset");
  const size_t len = sequences.front().size();
  for (const auto& s : sequences) {
    if (s.size() != len)
      throw std::invalid_argument("train_transformer: sequences must share one length");
    check_payload_tokens(s, model.config());
  }
  if (long(len) > model.config().context_length - 1)
    throw std::invalid_argument("train_transformer: sequences exceed context");

  Adam adam(opt.lr);
  std::vector<Tensor*> params = model.parameters();
  TransformerTrainResult result;

  const int bos = model.config().bos_token();
  const int vocab = model.config().vocab_size;
  for (size_t step = 0; step < opt.steps; ++step) {
    const TokenSequenceT& seq = sequences[step % sequences.size()];
    TokenSequenceT input;
    input.reserve(seq.size() + 1);
    input.push_back(bos);
    input.insert(input.end(), seq.begin(), seq.end());

    MatrixRM logits = model.forward(input);
    const long n = long(seq.size());
    MatrixRM dlogits = MatrixRM::Zero(logits.rows(), logits.cols());
    double nll = 0.0;
    for (long i = 0; i < n; ++i) {
      std::vector<double> p = model.masked_softmax(logits.row(i));
      nll -= std::log(std::max(p[size_t(seq[size_t(i)])], 1e-300));
      for (int j = 0; j < vocab; ++j) dlogits(i, j) = p[size_t(j)] / double(n);
      dlogits(i, seq[size_t(i)]) -= 1.0 / double(n);
    }
    double nll_per_token = nll / double(n);
    if (!std::isfinite(nll_per_token))
      throw std::runtime_error("train_transformer: loss diverged to non-finite at step " +
                               std::to_string(step));

    zero_grads(params);
    model.backward(dlogits);
    adam.step(params);

    if (step % opt.log_every == 0 || step + 1 == opt.steps)
      result.curve.emplace_back(step, nll_per_token);
  }
  return result;
}

// Ancestral sampling of a fixed-length payload from BOS. top_k == 1 is greedy
// (argmax, lowest index on ties).
inline TokenSequenceT generate(const LatentTransformer& model, const SamplerConfig& sampler,
                               int length) {
  const auto& cfg = model.config();
  sampler.validate(cfg.payload_vocab());
  if (length < 1 || length > cfg.context_length - 1)
    throw std::invalid_argument("generate: length outside [1, context_length - 1]");

  Rng rng(splitmix64(sampler.seed ^ 0x67656eULL));
  const int V = cfg.payload_vocab();

  LatentTransformer::DecodeState st = model.make_decode_state();
  TokenSequenceT out;
  out.reserve(size_t(length));
  int token = cfg.bos_token();
  for (int i = 0; i < length; ++i) {
    Eigen::RowVectorXd logits = model.decode_step(st, token);

    // Rank payload logits descending, index ascending on ties.
    std::vector<int> order(static_cast<size_t>(V));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      if (logits(a) != logits(b)) return logits(a) > logits(b);
      return a < b;
    });
    int keep = sampler.top_k > 0 ? sampler.top_k : V;

    if (keep == 1) {
      token = order[0];
    } else {
      double mx = logits(order[0]);
      std::vector<double> w(static_cast<size_t>(keep));
      double sum = 0.0;
      for (int j = 0; j < keep; ++j) {
        w[size_t(j)] = std::exp((logits(order[size_t(j)]) - mx) / sampler.temperature);
        sum += w[size_t(j)];
      }
      double r = rng.uniform() * sum;
      double acc = 0.0;
      token = order[size_t(keep - 1)];
      for (int j = 0; j < keep; ++j) {
        acc += w[size_t(j)];
        if (r < acc) {
          token = order[size_t(j)];
          break;
        }
      }
    }
    out.push_back(token);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Checkpointing ("lt/1")
// ---------------------------------------------------------------------------

inline nlohmann::json transformer_config_json(const TransformerConfig& cfg) {
  return {{"layers", cfg.layers},
          {"heads", cfg.heads},
          {"embed_dim", cfg.embed_dim},
          {"context_length", cfg.context_length},
          {"vocab_size", cfg.vocab_size}};
}

inline TransformerConfig transformer_config_from_json(const nlohmann::json& j) {
  TransformerConfig cfg;
  cfg.layers = j.at("layers").get<int>();
  cfg.heads = j.at("heads").get<int>();
  cfg.embed_dim = j.at("embed_dim").get<int>();
  cfg.context_length = j.at("context_length").get<int>();
  cfg.vocab_size = j.at("vocab_size").get<int>();
  cfg.validate();
  return cfg;
}

inline void save_transformer_checkpoint(const std::filesystem::path& path,
                                        LatentTransformer& model,
                                        const nlohmann::json& run_metadata = {}) {
  nlohmann::json cfg = transformer_config_json(model.config());
  if (!run_metadata.is_null() && !run_metadata.empty()) cfg["run"] = run_metadata;
  std::vector<const Tensor*> tensors;
  for (Tensor* t : model.parameters()) tensors.push_back(t);
  save_checkpoint(path, "lt/1", cfg, tensors);
}

inline LatentTransformer load_transformer_checkpoint(const std::filesystem::path& path) {
  CheckpointData ck = load_checkpoint(path, "lt/1");
  LatentTransformer model(transformer_config_from_json(ck.config), /*seed=*/0);
  restore_tensors(ck, model.parameters());
  return model;
}

}  // namespace ff
