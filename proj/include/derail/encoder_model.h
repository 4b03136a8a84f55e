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

#ifndef DERAIL_ENCODER_MODEL_H_
#define DERAIL_ENCODER_MODEL_H_

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "derail/corpus.h"
#include "derail/textnorm.h"

namespace derail {

// Post-LN encoder hyperparameters. vocab_size must be set before use.
struct ModelConfig {
  int num_layers = 2;
  int num_heads = 2;
  int hidden = 64;
  int ffn_multiplier = 4;
  int max_len = 130;
  int vocab_size = 0;
  double dropout = 0.1;

  int head_dim() const { return hidden / num_heads; }
  int ffn_dim() const { return hidden * ffn_multiplier; }
  void Validate() const;
  bool operator==(const ModelConfig&) const = default;
};

using Matrix = Eigen::MatrixXd;

// Biases and layer-norm parameters are stored as 1 x n matrices so that every
// tensor can be visited uniformly.
struct LayerParams {
  Matrix wq, bq, wk, bk, wv, bv, wo, bo;
  Matrix ln1_gain, ln1_bias;
  Matrix w1, b1, w2, b2;
  Matrix ln2_gain, ln2_bias;
};

struct ModelParams {
  ModelConfig config;
  Matrix token_embeddings;     // vocab_size x hidden
  Matrix position_embeddings;  // max_len x hidden
  Matrix emb_ln_gain, emb_ln_bias;
  std::vector<LayerParams> layers;
  Matrix head_weight;  // 1 x hidden
  Matrix head_bias;    // 1 x 1

  // Visits every tensor in the fixed serialization order.
  template <typename F>
  void ForEachTensor(F&& f);
  template <typename F>
  void ForEachTensor(F&& f) const;

  // Same shapes, all zeros.
  static ModelParams ZerosLike(const ModelParams& other);
  std::size_t NumScalars() const;
};

// Normal(0, 0.02) weights, zero biases, unit layer-norm gains.
ModelParams InitParams(const ModelConfig& cfg, std::uint64_t seed);

// Final hidden state at position 0 (CLS), inference mode.
Eigen::VectorXd Encode(const ModelParams& params, std::span<const TokenId> ids);

// Per layer, per head attention probabilities (rows = queries), inference
// mode.
std::vector<std::vector<Matrix>> AttentionWeights(const ModelParams& params,
                                                  std::span<const TokenId> ids);

// sigmoid(W h + b).
double Classify(const ModelParams& params, const Eigen::VectorXd& h);

inline constexpr double kProbClamp = 1e-7;

// Binary cross-entropy with p clamped to [1e-7, 1 - 1e-7].
double BceLoss(double p, int y);

// Loss for one sequence. When `grads` is non-null the gradient scaled by
// `grad_scale` is added to it. Dropout is active only when `dropout_rng` is
// non-null.
double ForwardBackward(const ModelParams& params, std::span<const TokenId> ids,
                       int label, ModelParams* grads, double grad_scale = 1.0,
                       std::mt19937_64* dropout_rng = nullptr);

// Mean per-example loss and, optionally, its gradient (inference mode).
double BatchLossAndGradient(const ModelParams& params,
                            const std::vector<ContextExample>& batch,
                            ModelParams* grads);

struct TrainConfig {
  int batch_size = 10;
  double learning_rate = 5e-5;
  int max_epochs = 4;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // Global gradient-norm clip; <= 0 disables clipping.
  double clip_norm = 1.0;

  void Validate() const;
};

class AdamOptimizer {
 public:
  AdamOptimizer(const ModelParams& like, const TrainConfig& cfg);
  void Step(ModelParams& params, const ModelParams& grads);
  std::int64_t steps() const { return step_; }

 private:
  TrainConfig cfg_;
  ModelParams m_;
  ModelParams v_;
  std::int64_t step_ = 0;
};

// Scales `grads` so that its global L2 norm is at most `max_norm`; returns
// the norm before clipping.
double ClipGradNorm(ModelParams& grads, double max_norm);

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
  std::optional<double> val_aupr;
};

struct TrainResult {
  ModelParams params;
  std::vector<EpochStats> trace;
  // 1-based epoch whose parameters were kept.
  int best_epoch = 0;
};

// Seeded mini-batch training. Keeps the epoch with the highest validation
// AUPR; falls back to the lowest validation loss when validation has no
// positives, and to the final epoch when there is no validation set.
TrainResult Train(ModelParams params, const std::vector<ContextExample>& train,
                  const std::vector<ContextExample>& val,
                  const TrainConfig& cfg);

// Inference-mode attack probabilities aligned with `examples`.
std::vector<double> PredictScores(const ModelParams& params,
                                  const std::vector<ContextExample>& examples);

template <typename F>
void ModelParams::ForEachTensor(F&& f) {
  f("token_embeddings", token_embeddings);
  f("position_embeddings", position_embeddings);
  f("emb_ln_gain", emb_ln_gain);
  f("emb_ln_bias", emb_ln_bias);
  for (std::size_t i = 0; i < layers.size(); ++i) {
    auto& l = layers[i];
    const std::string p = "layer" + std::to_string(i) + ".";
    f(p + "wq", l.wq);
    f(p + "bq", l.bq);
    f(p + "wk", l.wk);
    f(p + "bk", l.bk);
    f(p + "wv", l.wv);
    f(p + "bv", l.bv);
    f(p + "wo", l.wo);
    f(p + "bo", l.bo);
    f(p + "ln1_gain", l.ln1_gain);
    f(p + "ln1_bias", l.ln1_bias);
    f(p + "w1", l.w1);
    f(p + "b1", l.b1);
    f(p + "w2", l.w2);
    f(p + "b2", l.b2);
    f(p + "ln2_gain", l.ln2_gain);
    f(p + "ln2_bias", l.ln2_bias);
  }
  f("head_weight", head_weight);
  f("head_bias", head_bias);
}

template <typename F>
void ModelParams::ForEachTensor(F&& f) const {
  const_cast<ModelParams*>(this)->ForEachTensor(
      [&f](const std::string& name, Matrix& m) {
        f(name, static_cast<const Matrix&>(m));
      });
}

}  // namespace derail

#endif  // DERAIL_ENCODER_MODEL_H_
