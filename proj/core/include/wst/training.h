// Copyright (c) 2026 The wst Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef WST_TRAINING_H_
#define WST_TRAINING_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "wst/autodiff.h"
#include "wst/corpus.h"
#include "wst/model.h"

namespace wst {

struct TrainingConfig {
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  int batch_size = 8;
  int warmup_steps = 200;
  int decay_period = 2000;  // learning rate halves every decay_period steps
  double l2_factor = 1e-6;
  double base_lr = 1e-3;
  double clip_norm = 1.0;   // global gradient norm; <= 0 disables clipping
  double lambda_duration = 1.0;
  double lambda_prior = 1.0;
  double prenet_dropout = 0.5;
  double pitch_feedback_dropout = 0.5;
  std::uint64_t seed = 1;
  int max_steps = 2000;
  int snapshot_every = 0;   // 0 disables periodic snapshots

  // Full-scale schedule: batch 32, 4k warmup, halving every 50k steps.
  static TrainingConfig FullScale();
  void Validate() const;
};

// base_lr * min(step / warmup, 1) * 0.5^floor(max(step - warmup, 0) / decay).
double LrSchedule(const TrainingConfig& config, int step);

struct LossComponents {
  double recon = 0.0;
  double duration = 0.0;
  double prior = 0.0;
  double l2 = 0.0;
  double total = 0.0;
};

struct LossGraph {
  Var recon;
  Var duration;
  Var prior;
  Var data_total;  // recon + weighted duration + weighted prior, without L2
};

// Builds the joint training objective for a batch on `g`.
// `dropout_rng` enables prenet dropout; without it the loss is deterministic.
LossGraph BuildLoss(Graph& g, const Model& m, const std::vector<const Utterance*>& batch,
                    const TrainingConfig& config, std::mt19937_64* dropout_rng = nullptr);

// l2_factor * sum of squared trainable parameters.
double L2Penalty(const Model& m, double l2_factor);

// Loss values on a batch without gradients.
LossComponents TotalLoss(const Model& m, const std::vector<const Utterance*>& batch,
                         const TrainingConfig& config);

// Gradient per parameter (aligned with m.params().All()); entries no
// gradient reached are zero matrices of the parameter's shape.
struct GradientResult {
  std::vector<Mat> grads;
  LossComponents loss;
};

enum class LossTerm { kTotal, kReconstruction, kDuration, kPrior };

GradientResult ComputeGradients(const Model& m, const std::vector<const Utterance*>& batch,
                                const TrainingConfig& config,
                                LossTerm term = LossTerm::kTotal,
                                std::mt19937_64* dropout_rng = nullptr);

struct GradientAudit {
  // Non-prior parameters that received a non-zero prior-loss gradient.
  std::vector<std::string> prior_leaks;
  // Phoneme-encoder parameters that received a gradient through the word
  // sequence encoder.
  std::vector<std::string> word_sequence_leaks;
  // Sanity: the audited paths do train their own parameters.
  bool prior_params_reached = false;
  bool word_sequence_params_reached = false;

  bool ok() const {
    return prior_leaks.empty() && word_sequence_leaks.empty() && prior_params_reached &&
           word_sequence_params_reached;
  }
};

GradientAudit AuditGradientIsolation(const Model& m,
                                     const std::vector<const Utterance*>& batch);

class AdamOptimizer {
 public:
  AdamOptimizer(double beta1, double beta2, double epsilon)
      : beta1_(beta1), beta2_(beta2), epsilon_(epsilon) {}

  // Applies one update to every trainable parameter.
  void Step(const std::vector<Parameter*>& params, const std::vector<Mat>& grads, double lr);
  int steps() const { return t_; }

 private:
  double beta1_, beta2_, epsilon_;
  int t_ = 0;
  std::vector<Mat> m_, v_;
};

struct LossLogRow {
  int step = 0;
  double lr = 0.0;
  LossComponents loss;
};

struct TrainResult {
  Model model;
  std::vector<LossLogRow> log;
  int steps = 0;
};

using ProgressCallback = std::function<void(const LossLogRow&)>;
using SnapshotCallback = std::function<void(const Model&, int step)>;

// Feature normalization statistics (per-channel mean and population std).
void FitFeatureNormalization(Model& m, const std::vector<Utterance>& corpus);

// Rounds every parameter to float32 precision, the checkpoint storage type.
void RoundParametersToFloat(Model& m);

// Deterministic given the seeds. On return parameters are float-rounded and
// token statistics over `corpus` are attached.
TrainResult Train(const std::vector<Utterance>& corpus, const ModelConfig& model_config,
                  const TrainingConfig& config, const ProgressCallback& progress = {},
                  const SnapshotCallback& snapshot = {});

}  // namespace wst

#endif  // WST_TRAINING_H_
