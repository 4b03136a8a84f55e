// Copyright 2026 The Derail Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "derail/encoder_model.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "derail/errors.h"
#include "derail/eval_harness.h"
#include "derail/hashing.h"

namespace derail {
namespace {

constexpr double kLayerNormEps = 1e-12;
constexpr double kInitStd = 0.02;

struct LayerNormCache {
  Matrix xhat;
  Eigen::VectorXd inv_std;
};

Matrix LayerNormForward(const Matrix& x, const Matrix& gain, const Matrix& bias,
                        LayerNormCache* cache) {
  const Eigen::Index cols = x.cols();
  Eigen::VectorXd mean = x.rowwise().mean();
  Matrix centered = x.colwise() - mean;
  Eigen::VectorXd var = centered.array().square().rowwise().sum() /
                        static_cast<double>(cols);
  Eigen::VectorXd inv_std = (var.array() + kLayerNormEps).rsqrt();
  Matrix xhat = centered.array().colwise() * inv_std.array();
  Matrix y = (xhat.array().rowwise() * gain.row(0).array()).matrix();
  y.rowwise() += bias.row(0);
  if (cache != nullptr) {
    cache->xhat = std::move(xhat);
    cache->inv_std = std::move(inv_std);
  }
  return y;
}

// Returns dx; accumulates scaled gain/bias gradients.
Matrix LayerNormBackward(const Matrix& dy, const Matrix& gain,
                         const LayerNormCache& cache, Matrix* dgain,
                         Matrix* dbias) {
  *dgain += (dy.array() * cache.xhat.array()).colwise().sum().matrix();
  *dbias += dy.colwise().sum();
  const double n = static_cast<double>(dy.cols());
  Matrix dxhat = (dy.array().rowwise() * gain.row(0).array()).matrix();
  Eigen::VectorXd mean_d = dxhat.rowwise().sum() / n;
  Eigen::VectorXd mean_dx =
      (dxhat.array() * cache.xhat.array()).rowwise().sum().matrix() / n;
  Matrix dx = dxhat.colwise() - mean_d;
  dx -= (cache.xhat.array().colwise() * mean_dx.array()).matrix();
  return dx.array().colwise() * cache.inv_std.array();
}

double Gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); }

double GeluGrad(double x) {
  constexpr double kInvSqrt2Pi = 0.3989422804014327;
  return 0.5 * (1.0 + std::erf(x / std::sqrt(2.0))) +
         x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

// Inverted dropout mask; empty when dropout is inactive.
Matrix DropoutMask(Eigen::Index rows, Eigen::Index cols, double p,
                   std::mt19937_64* rng) {
  if (rng == nullptr || p <= 0.0) return Matrix();
  std::bernoulli_distribution keep(1.0 - p);
  Matrix mask(rows, cols);
  const double scale = 1.0 / (1.0 - p);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) mask(i, j) = keep(*rng) ? scale : 0.0;
  }
  return mask;
}

void ApplyMask(Matrix& x, const Matrix& mask) {
  if (mask.size() != 0) x.array() *= mask.array();
}

Matrix AddBias(Matrix x, const Matrix& bias) {
  x.rowwise() += bias.row(0);
  return x;
}

void SoftmaxRows(Matrix& s) {
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    const double mx = s.row(i).maxCoeff();
    s.row(i) = (s.row(i).array() - mx).exp();
    s.row(i) /= s.row(i).sum();
  }
}

struct LayerCache {
  Matrix x_in;
  Matrix q, k, v;
  std::vector<Matrix> attn;
  Matrix context;
  Matrix mask_attn;
  LayerNormCache ln1;
  Matrix x1;
  Matrix ffn_pre, ffn_act;
  Matrix mask_ffn;
  LayerNormCache ln2;
};

struct ForwardCache {
  std::vector<TokenId> ids;
  LayerNormCache emb_ln;
  Matrix mask_emb;
  std::vector<LayerCache> layers;
  Matrix out;
};

void ValidateIds(const ModelParams& params, std::span<const TokenId> ids) {
  const auto& cfg = params.config;
  if (ids.empty()) throw Error("empty token sequence");
  if (static_cast<int>(ids.size()) > cfg.max_len) {
    throw Error("sequence of " + std::to_string(ids.size()) +
                " tokens exceeds max_len " + std::to_string(cfg.max_len));
  }
  for (TokenId id : ids) {
    if (id < 0 || id >= cfg.vocab_size) {
      throw Error("token id " + std::to_string(id) + " outside vocabulary");
    }
  }
}

Matrix Forward(const ModelParams& params, std::span<const TokenId> ids,
               std::mt19937_64* rng, ForwardCache* cache) {
  ValidateIds(params, ids);
  const auto& cfg = params.config;
  const auto len = static_cast<Eigen::Index>(ids.size());
  const int dh = cfg.head_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  Matrix x(len, cfg.hidden);
  for (Eigen::Index t = 0; t < len; ++t) {
    x.row(t) = params.token_embeddings.row(ids[t]) +
               params.position_embeddings.row(t);
  }
  LayerNormCache emb_ln;
  x = LayerNormForward(x, params.emb_ln_gain, params.emb_ln_bias, &emb_ln);
  Matrix mask_emb = DropoutMask(len, cfg.hidden, cfg.dropout, rng);
  ApplyMask(x, mask_emb);
  if (cache != nullptr) {
    cache->ids.assign(ids.begin(), ids.end());
    cache->emb_ln = std::move(emb_ln);
    cache->mask_emb = std::move(mask_emb);
    cache->layers.clear();
  }

  for (const auto& layer : params.layers) {
    LayerCache lc;
    lc.x_in = x;
    lc.q = AddBias(x * layer.wq, layer.bq);
    lc.k = AddBias(x * layer.wk, layer.bk);
    lc.v = AddBias(x * layer.wv, layer.bv);
    lc.context.resize(len, cfg.hidden);
    for (int h = 0; h < cfg.num_heads; ++h) {
      const auto qh = lc.q.middleCols(h * dh, dh);
      const auto kh = lc.k.middleCols(h * dh, dh);
      const auto vh = lc.v.middleCols(h * dh, dh);
      Matrix scores = (qh * kh.transpose()) * scale;
      SoftmaxRows(scores);
      lc.context.middleCols(h * dh, dh) = scores * vh;
      lc.attn.push_back(std::move(scores));
    }
    Matrix attn_out = AddBias(lc.context * layer.wo, layer.bo);
    lc.mask_attn = DropoutMask(len, cfg.hidden, cfg.dropout, rng);
    ApplyMask(attn_out, lc.mask_attn);
    lc.x1 = LayerNormForward(x + attn_out, layer.ln1_gain, layer.ln1_bias,
                             &lc.ln1);

    lc.ffn_pre = AddBias(lc.x1 * layer.w1, layer.b1);
    lc.ffn_act = lc.ffn_pre.unaryExpr(&Gelu);
    Matrix ffn_out = AddBias(lc.ffn_act * layer.w2, layer.b2);
    lc.mask_ffn = DropoutMask(len, cfg.hidden, cfg.dropout, rng);
    ApplyMask(ffn_out, lc.mask_ffn);
    x = LayerNormForward(lc.x1 + ffn_out, layer.ln2_gain, layer.ln2_bias,
                         &lc.ln2);
    if (cache != nullptr) cache->layers.push_back(std::move(lc));
  }
  if (cache != nullptr) cache->out = x;
  return x;
}

void Backward(const ModelParams& params, const ForwardCache& cache,
              Matrix d_out, ModelParams& grads) {
  const auto& cfg = params.config;
  const int dh = cfg.head_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  for (std::size_t li = params.layers.size(); li-- > 0;) {
    const auto& layer = params.layers[li];
    const auto& lc = cache.layers[li];
    auto& g = grads.layers[li];

    // Feed-forward sublayer.
    Matrix d_res2 = LayerNormBackward(d_out, layer.ln2_gain, lc.ln2,
                                      &g.ln2_gain, &g.ln2_bias);
    Matrix d_ffn_out = d_res2;
    ApplyMask(d_ffn_out, lc.mask_ffn);
    g.w2 += lc.ffn_act.transpose() * d_ffn_out;
    g.b2 += d_ffn_out.colwise().sum();
    Matrix d_act = d_ffn_out * layer.w2.transpose();
    Matrix d_pre =
        d_act.array() * lc.ffn_pre.unaryExpr(&GeluGrad).array();
    g.w1 += lc.x1.transpose() * d_pre;
    g.b1 += d_pre.colwise().sum();
    Matrix d_x1 = d_res2 + d_pre * layer.w1.transpose();

    // Attention sublayer.
    Matrix d_res1 = LayerNormBackward(d_x1, layer.ln1_gain, lc.ln1,
                                      &g.ln1_gain, &g.ln1_bias);
    Matrix d_attn_out = d_res1;
    ApplyMask(d_attn_out, lc.mask_attn);
    g.wo += lc.context.transpose() * d_attn_out;
    g.bo += d_attn_out.colwise().sum();
    Matrix d_context = d_attn_out * layer.wo.transpose();

    Matrix d_q(lc.q.rows(), lc.q.cols());
    Matrix d_k(lc.k.rows(), lc.k.cols());
    Matrix d_v(lc.v.rows(), lc.v.cols());
    for (int h = 0; h < cfg.num_heads; ++h) {
      const Matrix& a = lc.attn[h];
      const auto d_ctx_h = d_context.middleCols(h * dh, dh);
      Matrix d_a = d_ctx_h * lc.v.middleCols(h * dh, dh).transpose();
      d_v.middleCols(h * dh, dh) = a.transpose() * d_ctx_h;
      Eigen::VectorXd row_dot = (d_a.array() * a.array()).rowwise().sum();
      Matrix d_s = a.array() * (d_a.colwise() - row_dot).array();
      d_q.middleCols(h * dh, dh) = d_s * lc.k.middleCols(h * dh, dh) * scale;
      d_k.middleCols(h * dh, dh) =
          d_s.transpose() * lc.q.middleCols(h * dh, dh) * scale;
    }
    g.wq += lc.x_in.transpose() * d_q;
    g.bq += d_q.colwise().sum();
    g.wk += lc.x_in.transpose() * d_k;
    g.bk += d_k.colwise().sum();
    g.wv += lc.x_in.transpose() * d_v;
    g.bv += d_v.colwise().sum();
    d_out = d_res1 + d_q * layer.wq.transpose() + d_k * layer.wk.transpose() +
            d_v * layer.wv.transpose();
  }

  ApplyMask(d_out, cache.mask_emb);
  Matrix d_emb = LayerNormBackward(d_out, params.emb_ln_gain, cache.emb_ln,
                                   &grads.emb_ln_gain, &grads.emb_ln_bias);
  for (std::size_t t = 0; t < cache.ids.size(); ++t) {
    const auto row = static_cast<Eigen::Index>(t);
    grads.token_embeddings.row(cache.ids[t]) += d_emb.row(row);
    grads.position_embeddings.row(row) += d_emb.row(row);
  }
}

double Sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

void ModelConfig::Validate() const {
  if (num_layers < 1) throw ConfigError("model.num_layers", "must be >= 1");
  if (num_heads < 1) throw ConfigError("model.num_heads", "must be >= 1");
  if (hidden < 1) throw ConfigError("model.hidden", "must be >= 1");
  if (hidden % num_heads != 0) {
    throw ConfigError("model.hidden", "must be divisible by num_heads");
  }
  if (ffn_multiplier < 1) {
    throw ConfigError("model.ffn_multiplier", "must be >= 1");
  }
  if (max_len < 2) throw ConfigError("model.max_len", "must be >= 2");
  if (vocab_size < 1) throw ConfigError("model.vocab_size", "must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) {
    throw ConfigError("model.dropout", "must be in [0, 1)");
  }
}

ModelParams ModelParams::ZerosLike(const ModelParams& other) {
  ModelParams out = other;
  out.ForEachTensor([](const std::string&, Matrix& m) { m.setZero(); });
  return out;
}

std::size_t ModelParams::NumScalars() const {
  std::size_t n = 0;
  ForEachTensor([&n](const std::string&, const Matrix& m) {
    n += static_cast<std::size_t>(m.size());
  });
  return n;
}

ModelParams InitParams(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.Validate();
  const int h = cfg.hidden;
  const int f = cfg.ffn_dim();
  ModelParams p;
  p.config = cfg;
  p.token_embeddings = Matrix(cfg.vocab_size, h);
  p.position_embeddings = Matrix(cfg.max_len, h);
  p.emb_ln_gain = Matrix::Ones(1, h);
  p.emb_ln_bias = Matrix::Zero(1, h);
  p.layers.resize(static_cast<std::size_t>(cfg.num_layers));
  for (auto& l : p.layers) {
    l.wq = Matrix(h, h);
    l.wk = Matrix(h, h);
    l.wv = Matrix(h, h);
    l.wo = Matrix(h, h);
    l.bq = l.bk = l.bv = l.bo = Matrix::Zero(1, h);
    l.ln1_gain = l.ln2_gain = Matrix::Ones(1, h);
    l.ln1_bias = l.ln2_bias = Matrix::Zero(1, h);
    l.w1 = Matrix(h, f);
    l.b1 = Matrix::Zero(1, f);
    l.w2 = Matrix(f, h);
    l.b2 = Matrix::Zero(1, h);
  }
  p.head_weight = Matrix(1, h);
  p.head_bias = Matrix::Zero(1, 1);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, kInitStd);
  auto fill = [&](Matrix& m) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = normal(rng);
    }
  };
  fill(p.token_embeddings);
  fill(p.position_embeddings);
  for (auto& l : p.layers) {
    fill(l.wq);
    fill(l.wk);
    fill(l.wv);
    fill(l.wo);
    fill(l.w1);
    fill(l.w2);
  }
  fill(p.head_weight);
  return p;
}

Eigen::VectorXd Encode(const ModelParams& params,
                       std::span<const TokenId> ids) {
  return Forward(params, ids, nullptr, nullptr).row(0).transpose();
}

std::vector<std::vector<Matrix>> AttentionWeights(
    const ModelParams& params, std::span<const TokenId> ids) {
  ForwardCache cache;
  Forward(params, ids, nullptr, &cache);
  std::vector<std::vector<Matrix>> out;
  for (auto& lc : cache.layers) out.push_back(std::move(lc.attn));
  return out;
}

double Classify(const ModelParams& params, const Eigen::VectorXd& h) {
  if (h.size() != params.head_weight.cols()) {
    throw Error("hidden vector has wrong length");
  }
  return Sigmoid(params.head_weight.row(0).dot(h) + params.head_bias(0, 0));
}

double BceLoss(double p, int y) {
  const double q = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
  return y == 1 ? -std::log(q) : -std::log(1.0 - q);
}

double ForwardBackward(const ModelParams& params, std::span<const TokenId> ids,
                       int label, ModelParams* grads, double grad_scale,
                       std::mt19937_64* dropout_rng) {
  ForwardCache cache;
  const bool need_cache = grads != nullptr;
  Matrix out = Forward(params, ids, dropout_rng, need_cache ? &cache : nullptr);
  const Eigen::VectorXd h = out.row(0).transpose();
  const double p = Classify(params, h);
  const double loss = BceLoss(p, label);
  if (grads == nullptr) return loss;

  // d loss / d logit for sigmoid + cross-entropy.
  const double d_logit = (p - static_cast<double>(label)) * grad_scale;
  grads->head_weight.row(0) += d_logit * h.transpose();
  grads->head_bias(0, 0) += d_logit;
  Matrix d_out = Matrix::Zero(out.rows(), out.cols());
  d_out.row(0) = d_logit * params.head_weight.row(0);
  Backward(params, cache, std::move(d_out), *grads);
  return loss;
}

double BatchLossAndGradient(const ModelParams& params,
                            const std::vector<ContextExample>& batch,
                            ModelParams* grads) {
  if (batch.empty()) throw Error("empty batch");
  const double scale = 1.0 / static_cast<double>(batch.size());
  double total = 0.0;
  for (const auto& ex : batch) {
    total += ForwardBackward(params, ex.context_token_ids, ex.label, grads,
                             scale);
  }
  return total * scale;
}

void TrainConfig::Validate() const {
  if (batch_size < 1) throw ConfigError("train.batch_size", "must be >= 1");
  if (!(learning_rate > 0.0)) {
    throw ConfigError("train.learning_rate", "must be > 0");
  }
  if (max_epochs < 1) throw ConfigError("train.max_epochs", "must be >= 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) {
    throw ConfigError("train.beta1", "must be in [0, 1)");
  }
  if (!(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("train.beta2", "must be in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw ConfigError("train.epsilon", "must be > 0");
}

AdamOptimizer::AdamOptimizer(const ModelParams& like, const TrainConfig& cfg)
    : cfg_(cfg),
      m_(ModelParams::ZerosLike(like)),
      v_(ModelParams::ZerosLike(like)) {}

void AdamOptimizer::Step(ModelParams& params, const ModelParams& grads) {
  ++step_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
  std::vector<Matrix*> ps, ms, vs;
  std::vector<const Matrix*> gs;
  params.ForEachTensor([&](const std::string&, Matrix& m) { ps.push_back(&m); });
  m_.ForEachTensor([&](const std::string&, Matrix& m) { ms.push_back(&m); });
  v_.ForEachTensor([&](const std::string&, Matrix& m) { vs.push_back(&m); });
  grads.ForEachTensor(
      [&](const std::string&, const Matrix& m) { gs.push_back(&m); });
  for (std::size_t i = 0; i < ps.size(); ++i) {
    Matrix& m = *ms[i];
    Matrix& v = *vs[i];
    const Matrix& g = *gs[i];
    m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * g;
    v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * g.cwiseProduct(g);
    *ps[i] -= (cfg_.learning_rate * (m.array() / bc1) /
               ((v.array() / bc2).sqrt() + cfg_.epsilon))
                  .matrix();
  }
}

double ClipGradNorm(ModelParams& grads, double max_norm) {
  double sq = 0.0;
  grads.ForEachTensor(
      [&sq](const std::string&, const Matrix& m) { sq += m.squaredNorm(); });
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double factor = max_norm / norm;
    grads.ForEachTensor([factor](const std::string&, Matrix& m) { m *= factor; });
  }
  return norm;
}

std::vector<double> PredictScores(const ModelParams& params,
                                  const std::vector<ContextExample>& examples) {
  std::vector<double> scores;
  scores.reserve(examples.size());
  for (const auto& ex : examples) {
    scores.push_back(Classify(params, Encode(params, ex.context_token_ids)));
  }
  return scores;
}

TrainResult Train(ModelParams params, const std::vector<ContextExample>& train,
                  const std::vector<ContextExample>& val,
                  const TrainConfig& cfg) {
  cfg.Validate();
  if (train.empty()) throw Error("empty training set");

  std::mt19937_64 shuffle_rng(DeriveSeed(cfg.seed, "shuffle"));
  std::mt19937_64 dropout_rng(DeriveSeed(cfg.seed, "dropout"));
  AdamOptimizer optimizer(params, cfg);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  std::vector<int> val_labels;
  for (const auto& ex : val) val_labels.push_back(ex.label);
  const bool val_has_positive =
      std::find(val_labels.begin(), val_labels.end(), 1) != val_labels.end();

  TrainResult result;
  result.params = params;
  double best_score = -std::numeric_limits<double>::infinity();
  const auto batch = static_cast<std::size_t>(cfg.batch_size);

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      const double scale = 1.0 / static_cast<double>(end - start);
      ModelParams grads = ModelParams::ZerosLike(params);
      for (std::size_t i = start; i < end; ++i) {
        const auto& ex = train[order[i]];
        loss_sum += ForwardBackward(params, ex.context_token_ids, ex.label,
                                    &grads, scale, &dropout_rng);
      }
      ClipGradNorm(grads, cfg.clip_norm);
      optimizer.Step(params, grads);
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = loss_sum / static_cast<double>(train.size());
    if (!val.empty()) {
      const auto scores = PredictScores(params, val);
      double val_loss = 0.0;
      for (std::size_t i = 0; i < val.size(); ++i) {
        val_loss += BceLoss(scores[i], val_labels[i]);
      }
      stats.val_loss = val_loss / static_cast<double>(val.size());
      stats.val_accuracy =
          ComputePointMetrics(Confusion(scores, val_labels, 0.5)).accuracy;
      if (val_has_positive) {
        stats.val_aupr = ComputePRCurve(scores, val_labels).aupr;
      }
    }
    result.trace.push_back(stats);

    double score = static_cast<double>(epoch);  // no validation: keep last
    if (!val.empty()) {
      score = stats.val_aupr ? *stats.val_aupr : -stats.val_loss;
    }
    if (score > best_score) {
      best_score = score;
      result.params = params;
      result.best_epoch = epoch;
    }
  }
  return result;
}

}  // namespace derail
