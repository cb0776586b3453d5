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

#include "wst/training.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "wst/control.h"
#include "wst/decoder.h"
#include "wst/encoders.h"
#include "wst/errors.h"
#include "wst/layout.h"
#include "wst/prior.h"

namespace wst {

TrainingConfig TrainingConfig::FullScale() {
  TrainingConfig c;
  c.batch_size = 32;
  c.warmup_steps = 4000;
  c.decay_period = 50000;
  c.max_steps = 200000;
  return c;
}

void TrainingConfig::Validate() const {
  if (batch_size < 1 || warmup_steps < 1 || decay_period < 1 || max_steps < 1 ||
      !(base_lr > 0.0) || l2_factor < 0.0 || lambda_duration < 0.0 || lambda_prior < 0.0 ||
      !(prenet_dropout >= 0.0 && prenet_dropout < 1.0) ||
      !(pitch_feedback_dropout >= 0.0 && pitch_feedback_dropout <= 1.0) ||
      !(adam_beta1 > 0.0 && adam_beta1 < 1.0) || !(adam_beta2 > 0.0 && adam_beta2 < 1.0) ||
      !(adam_epsilon > 0.0) || snapshot_every < 0) {
    throw ValidationError("invalid training configuration");
  }
  if (warmup_steps >= max_steps) {
    throw ValidationError("warmup_steps must be smaller than max_steps");
  }
}

double LrSchedule(const TrainingConfig& config, int step) {
  if (step < 0) throw ValidationError("negative step");
  const double ramp = std::min(static_cast<double>(step) / config.warmup_steps, 1.0);
  const int halvings = std::max(step - config.warmup_steps, 0) / config.decay_period;
  return config.base_lr * ramp * std::pow(0.5, halvings);
}

LossGraph BuildLoss(Graph& g, const Model& m, const std::vector<const Utterance*>& batch,
                    const TrainingConfig& config, std::mt19937_64* dropout_rng) {
  if (batch.empty()) throw ValidationError("empty batch");
  std::vector<const PhonemeSequence*> texts;
  std::vector<std::vector<int>> durations;
  int total_frames = 0;
  for (const Utterance* u : batch) {
    u->Validate();
    texts.push_back(&u->text);
    durations.push_back(u->durations);
    total_frames += u->num_frames();
  }
  BatchLayout layout = BatchLayout::Build(texts, durations);
  Mat stacked(total_frames, kNumChannels);
  Mat log_target(layout.num_phonemes(), 1);
  {
    int row = 0, ph = 0;
    for (const Utterance* u : batch) {
      stacked.middleRows(row, u->num_frames()) = m.NormalizeFeatures(u->features.frames);
      row += u->num_frames();
      for (int d : u->durations) log_target(ph++, 0) = std::log1p(static_cast<double>(d));
    }
  }

  Var frames = g.Constant(std::move(stacked));
  Var enc = PhonemeEncode(g, m, layout);
  Var ws = WordSequenceEncode(g, m, enc, layout);
  TokenAttention att = TokenAttend(g, m, ReferenceSummarize(g, m, frames, layout));
  Var cond = BuildConditioning(enc, ws, att.embeddings, layout);
  DurationOutputs dur = PredictDurations(g, m, cond);
  Var ups = GaussianUpsample(cond, dur.sigma, layout);
  Var pred = DecodeTeacherForced(g, m, ups, frames, layout,
                                 {config.prenet_dropout, config.pitch_feedback_dropout, dropout_rng});

  LossGraph out;
  Var diff = Sub(pred, frames);
  out.recon = Add(Mean(Square(diff)), Mean(Abs(diff)));
  out.duration = Mean(Square(Sub(dur.log_duration, g.Constant(std::move(log_target)))));
  out.prior = PriorPredictTeacherForced(g, m, PriorInputs(enc, ws, layout), att.embeddings,
                                        layout)
                  .loss;
  out.data_total = Add(Add(out.recon, Scale(out.duration, config.lambda_duration)),
                       Scale(out.prior, config.lambda_prior));
  return out;
}

double L2Penalty(const Model& m, double l2_factor) {
  double sum = 0.0;
  for (const Parameter* p : m.params().All()) {
    if (p->trainable) sum += p->value.squaredNorm();
  }
  return l2_factor * sum;
}

namespace {

LossComponents ReadLoss(const LossGraph& lg, const Model& m, const TrainingConfig& config) {
  LossComponents c;
  c.recon = lg.recon.value()(0, 0);
  c.duration = lg.duration.value()(0, 0);
  c.prior = lg.prior.value()(0, 0);
  c.l2 = L2Penalty(m, config.l2_factor);
  c.total = lg.data_total.value()(0, 0) + c.l2;
  return c;
}

}  // namespace

LossComponents TotalLoss(const Model& m, const std::vector<const Utterance*>& batch,
                         const TrainingConfig& config) {
  Graph g(false);
  return ReadLoss(BuildLoss(g, m, batch, config), m, config);
}

GradientResult ComputeGradients(const Model& m, const std::vector<const Utterance*>& batch,
                                const TrainingConfig& config, LossTerm term,
                                std::mt19937_64* dropout_rng) {
  Graph g(true);
  LossGraph lg = BuildLoss(g, m, batch, config, dropout_rng);
  Var root = lg.data_total;
  switch (term) {
    case LossTerm::kTotal: root = lg.data_total; break;
    case LossTerm::kReconstruction: root = lg.recon; break;
    case LossTerm::kDuration: root = lg.duration; break;
    case LossTerm::kPrior: root = lg.prior; break;
  }
  g.Backward(root);
  GradientResult r;
  r.loss = ReadLoss(lg, m, config);
  auto grads = g.ParamGrads();
  for (const Parameter* p : m.params().All()) {
    auto it = grads.find(p);
    Mat grad = it != grads.end() ? it->second : Mat::Zero(p->value.rows(), p->value.cols());
    if (term == LossTerm::kTotal && p->trainable && config.l2_factor > 0.0) {
      grad += 2.0 * config.l2_factor * p->value;
    }
    r.grads.push_back(std::move(grad));
  }
  return r;
}

GradientAudit AuditGradientIsolation(const Model& m,
                                     const std::vector<const Utterance*>& batch) {
  GradientAudit audit;
  TrainingConfig cfg;
  cfg.l2_factor = 0.0;
  const auto params = m.params().All();

  GradientResult prior = ComputeGradients(m, batch, cfg, LossTerm::kPrior);
  for (size_t i = 0; i < params.size(); ++i) {
    const bool nonzero = (prior.grads[i].array() != 0.0).any();
    if (Model::IsPriorParameter(*params[i])) {
      audit.prior_params_reached = audit.prior_params_reached || nonzero;
    } else if (nonzero) {
      audit.prior_leaks.push_back(params[i]->name);
    }
  }

  // Any scalar function of the word sequence encoding.
  std::vector<const PhonemeSequence*> texts;
  for (const Utterance* u : batch) texts.push_back(&u->text);
  BatchLayout layout = BatchLayout::Build(texts);
  Graph g(true);
  Var enc = PhonemeEncode(g, m, layout);
  Var ws = WordSequenceEncode(g, m, enc, layout);
  g.Backward(Sum(Square(ws)));
  auto grads = g.ParamGrads();
  for (const Parameter* p : params) {
    auto it = grads.find(p);
    const bool nonzero = it != grads.end() && (it->second.array() != 0.0).any();
    if (p->name.rfind("phoneme_encoder/", 0) == 0 && nonzero) {
      audit.word_sequence_leaks.push_back(p->name);
    }
    if (p->name.rfind("word_sequence/", 0) == 0 && nonzero) {
      audit.word_sequence_params_reached = true;
    }
  }
  return audit;
}

void AdamOptimizer::Step(const std::vector<Parameter*>& params,
                         const std::vector<Mat>& grads, double lr) {
  if (grads.size() != params.size()) throw std::logic_error("gradient count mismatch");
  if (m_.empty()) {
    for (const Parameter* p : params) {
      m_.push_back(Mat::Zero(p->value.rows(), p->value.cols()));
      v_.push_back(Mat::Zero(p->value.rows(), p->value.cols()));
    }
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, t_);
  const double c2 = 1.0 - std::pow(beta2_, t_);
  for (size_t i = 0; i < params.size(); ++i) {
    if (!params[i]->trainable) continue;
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grads[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grads[i].cwiseAbs2();
    params[i]->value.array() -=
        lr * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + epsilon_);
  }
}

void FitFeatureNormalization(Model& m, const std::vector<Utterance>& corpus) {
  if (corpus.empty()) throw ValidationError("empty corpus");
  RowVec sum = RowVec::Zero(kNumChannels);
  long n = 0;
  for (const Utterance& u : corpus) {
    sum += u.features.frames.colwise().sum();
    n += u.num_frames();
  }
  const RowVec mean = sum / static_cast<double>(n);
  RowVec sq = RowVec::Zero(kNumChannels);
  for (const Utterance& u : corpus) {
    sq += (u.features.frames.rowwise() - mean).array().square().matrix().colwise().sum();
  }
  const RowVec std = (sq / static_cast<double>(n)).array().sqrt().matrix();
  m.SetFeatureNormalization(mean, std);
}

void RoundParametersToFloat(Model& m) {
  for (Parameter* p : m.params().All()) {
    p->value = p->value.cast<float>().cast<double>();
  }
}

TrainResult Train(const std::vector<Utterance>& corpus, const ModelConfig& model_config,
                  const TrainingConfig& config, const ProgressCallback& progress,
                  const SnapshotCallback& snapshot) {
  config.Validate();
  if (corpus.empty()) throw ValidationError("empty training corpus");
  TrainResult result{Model(model_config), {}, 0};
  Model& model = result.model;
  FitFeatureNormalization(model, corpus);
  RoundParametersToFloat(model);

  std::mt19937_64 rng(config.seed);
  std::mt19937_64 dropout_rng(config.seed ^ 0x5eed5eedULL);
  std::vector<int> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);
  size_t cursor = order.size();
  const auto params = model.params().All();
  AdamOptimizer adam(config.adam_beta1, config.adam_beta2, config.adam_epsilon);

  for (int step = 1; step <= config.max_steps; ++step) {
    std::vector<const Utterance*> batch;
    while (static_cast<int>(batch.size()) < std::min<int>(config.batch_size,
                                                            static_cast<int>(corpus.size()))) {
      if (cursor >= order.size()) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      batch.push_back(&corpus[order[cursor++]]);
    }
    GradientResult gr = ComputeGradients(model, batch, config, LossTerm::kTotal, &dropout_rng);
    if (!std::isfinite(gr.loss.total)) {
      throw TrainingError("non-finite loss at step " + std::to_string(step));
    }
    double norm_sq = 0.0;
    for (const Mat& g : gr.grads) norm_sq += g.squaredNorm();
    if (!std::isfinite(norm_sq)) {
      throw TrainingError("non-finite gradient at step " + std::to_string(step));
    }
    if (config.clip_norm > 0.0) {
      const double norm = std::sqrt(norm_sq);
      if (norm > config.clip_norm) {
        for (Mat& g : gr.grads) g *= config.clip_norm / norm;
      }
    }
    const double lr = LrSchedule(config, step);
    adam.Step(params, gr.grads, lr);
    LossLogRow row{step, lr, gr.loss};
    result.log.push_back(row);
    if (progress) progress(row);
    if (snapshot && config.snapshot_every > 0 && step % config.snapshot_every == 0 &&
        step != config.max_steps) {
      Model snap = model;
      RoundParametersToFloat(snap);
      snapshot(snap, step);
    }
  }
  result.steps = config.max_steps;
  RoundParametersToFloat(model);
  model.token_stats = ComputeTokenStats(model, corpus);
  return result;
}

}  // namespace wst
