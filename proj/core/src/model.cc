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

#include "wst/model.h"

#include <cmath>
#include <random>

#include "wst/corpus.h"
#include "wst/errors.h"
#include "wst/layout.h"

namespace wst {

namespace {

std::string Join(std::string_view prefix, std::string_view leaf) {
  std::string s(prefix);
  s += '/';
  s += leaf;
  return s;
}

}  // namespace

void ModelConfig::Validate() const {
  if (num_tokens < 1 || token_dim < 1 || phoneme_embed_dim < 1 || enc_dim < 2 ||
      word_seq_dim < 2 || ref_dim < 1 || ref_conv_channels < 1 || attention_dim < 1 ||
      duration_hidden < 1 || prenet_dim < 1 || decoder_dim < 1 || prior_dim < 1) {
    throw ValidationError("model dimensions must be positive");
  }
  if (enc_dim % 2 != 0 || word_seq_dim % 2 != 0) {
    throw ValidationError("bidirectional encoder widths must be even");
  }
  if (fixed_sigma_value <= 0.0 || min_sigma < 0.0) {
    throw ValidationError("sigma settings must be positive");
  }
}

ParameterStore::ParameterStore(const ParameterStore& other) { *this = other; }

ParameterStore& ParameterStore::operator=(const ParameterStore& other) {
  if (this == &other) return *this;
  params_.clear();
  for (const auto& p : other.params_) params_.push_back(std::make_unique<Parameter>(*p));
  return *this;
}

Parameter& ParameterStore::Add(std::string name, Mat value, bool trainable) {
  if (Contains(name)) throw std::logic_error("duplicate parameter " + name);
  auto p = std::make_unique<Parameter>();
  p->name = std::move(name);
  p->value = std::move(value);
  p->trainable = trainable;
  params_.push_back(std::move(p));
  return *params_.back();
}

Parameter& ParameterStore::Get(std::string_view name) {
  for (auto& p : params_) {
    if (p->name == name) return *p;
  }
  throw std::out_of_range("no parameter " + std::string(name));
}

const Parameter& ParameterStore::Get(std::string_view name) const {
  for (const auto& p : params_) {
    if (p->name == name) return *p;
  }
  throw std::out_of_range("no parameter " + std::string(name));
}

bool ParameterStore::Contains(std::string_view name) const {
  for (const auto& p : params_) {
    if (p->name == name) return true;
  }
  return false;
}

std::vector<Parameter*> ParameterStore::All() {
  std::vector<Parameter*> out;
  for (auto& p : params_) out.push_back(p.get());
  return out;
}

std::vector<const Parameter*> ParameterStore::All() const {
  std::vector<const Parameter*> out;
  for (const auto& p : params_) out.push_back(p.get());
  return out;
}

size_t ParameterStore::NumValues() const {
  size_t n = 0;
  for (const auto& p : params_) n += static_cast<size_t>(p->value.size());
  return n;
}

Model::Model(const ModelConfig& config) : config_(config) {
  config_.Validate();
  Init();
}

void Model::Init() {
  const ModelConfig& c = config_;
  std::mt19937_64 rng(c.seed);
  auto glorot = [&](int rows, int cols) {
    const double limit = std::sqrt(6.0 / (rows + cols));
    std::uniform_real_distribution<double> u(-limit, limit);
    Mat m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
    return m;
  };
  auto linear = [&](std::string_view prefix, int in, int out) {
    params_.Add(Join(prefix, "w"), glorot(in, out));
    params_.Add(Join(prefix, "b"), Mat::Zero(1, out));
  };
  auto gru = [&](std::string_view prefix, int in, int hidden) {
    params_.Add(Join(prefix, "w_input"), glorot(in, 3 * hidden));
    params_.Add(Join(prefix, "b_input"), Mat::Zero(1, 3 * hidden));
    params_.Add(Join(prefix, "w_hidden"), glorot(hidden, 3 * hidden));
    params_.Add(Join(prefix, "b_hidden"), Mat::Zero(1, 3 * hidden));
  };

  // Phoneme encoder: embedding, one convolution, one bidirectional GRU.
  params_.Add("phoneme_encoder/embedding",
              glorot(PhonemeInventory::kSize, c.phoneme_embed_dim));
  linear("phoneme_encoder/conv", 3 * c.phoneme_embed_dim, c.phoneme_embed_dim);
  gru("phoneme_encoder/gru_fwd", c.phoneme_embed_dim, c.enc_dim / 2);
  gru("phoneme_encoder/gru_bwd", c.phoneme_embed_dim, c.enc_dim / 2);

  // Word sequence encoder.
  linear("word_sequence/proj", c.enc_dim, c.word_seq_dim);
  gru("word_sequence/gru_fwd", c.word_seq_dim, c.word_seq_dim / 2);
  gru("word_sequence/gru_bwd", c.word_seq_dim, c.word_seq_dim / 2);

  // Reference summarizer: two convolutions then a GRU whose final state is
  // the per-word summary.
  linear("reference/conv1", 3 * kNumChannels, c.ref_conv_channels);
  linear("reference/conv2", 3 * c.ref_conv_channels, c.ref_conv_channels);
  gru("reference/gru", c.ref_conv_channels, c.ref_dim);

  // Style tokens and content-based attention.
  {
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    const double scale = 1.0 / std::sqrt(static_cast<double>(c.token_dim));
    Mat tokens(c.num_tokens, c.token_dim);
    for (Eigen::Index i = 0; i < tokens.size(); ++i) tokens.data()[i] = u(rng) * scale;
    params_.Add("tokens/tokens", std::move(tokens));
  }
  params_.Add("tokens/w_query", glorot(c.ref_dim, c.attention_dim));
  params_.Add("tokens/w_key", glorot(c.token_dim, c.attention_dim));

  // Duration predictor.
  linear("duration/hidden", c.cond_dim(), c.duration_hidden);
  linear("duration/out", c.duration_hidden, 2);

  // Frame decoder.
  linear("decoder/prenet1", kNumChannels, c.prenet_dim);
  linear("decoder/prenet2", c.prenet_dim, c.prenet_dim);
  gru("decoder/gru", c.cond_dim() + c.prenet_dim, c.decoder_dim);
  linear("decoder/out", c.decoder_dim + c.cond_dim(), kNumChannels);

  // Prior autoregressive encoder.
  gru("prior/gru", c.prior_input_dim() + c.token_dim, c.prior_dim);
  linear("prior/out", c.prior_dim, c.token_dim);

  params_.Add("norm/mean", Mat::Zero(1, kNumChannels), false);
  params_.Add("norm/std", Mat::Ones(1, kNumChannels), false);
}

bool Model::IsPriorParameter(const Parameter& p) {
  return std::string_view(p.name).substr(0, kPriorPrefix.size()) == kPriorPrefix;
}

void Model::SetFeatureNormalization(const RowVec& mean, const RowVec& std) {
  if (mean.size() != kNumChannels || std.size() != kNumChannels) {
    throw ValidationError("normalization must have 22 channels");
  }
  params_.Get("norm/mean").value = mean;
  Mat s = std;
  s = s.cwiseMax(1e-3);
  params_.Get("norm/std").value = s;
}

Mat Model::NormalizeFeatures(const Mat& frames) const {
  const RowVec mean = P("norm/mean").value.row(0);
  const RowVec std = P("norm/std").value.row(0);
  return ((frames.rowwise() - mean).array().rowwise() / std.array()).matrix();
}

Mat Model::DenormalizeFeatures(const Mat& normalized) const {
  const RowVec mean = P("norm/mean").value.row(0);
  const RowVec std = P("norm/std").value.row(0);
  return ((normalized.array().rowwise() * std.array()).rowwise() + mean.array()).matrix();
}

StyleTokenBank Model::token_bank() const {
  return {P("tokens/tokens").value, P("tokens/w_query").value, P("tokens/w_key").value};
}

Var Linear(Graph& g, const Model& m, Var x, std::string_view prefix) {
  return AddBias(MatMul(x, g.Param(m.P(Join(prefix, "w")))),
                 g.Param(m.P(Join(prefix, "b"))));
}

Var Conv1d(Graph& g, const Model& m, Var x, std::string_view prefix,
           const std::vector<Span>& spans) {
  const int rows = x.rows();
  Var prev = GatherRows(x, ShiftWithinSpans(spans, rows, -1));
  Var next = GatherRows(x, ShiftWithinSpans(spans, rows, +1));
  return Linear(g, m, ConcatCols({prev, x, next}), prefix);
}

Var Gru(Graph& g, const Model& m, Var x, std::string_view prefix,
        const std::vector<Span>& spans, bool reverse) {
  Var xp = AddBias(MatMul(x, g.Param(m.P(Join(prefix, "w_input")))),
                   g.Param(m.P(Join(prefix, "b_input"))));
  return GruSequence(xp, g.Param(m.P(Join(prefix, "w_hidden"))),
                     g.Param(m.P(Join(prefix, "b_hidden"))), ToSequences(spans, reverse));
}

Var BiGru(Graph& g, const Model& m, Var x, std::string_view prefix,
          const std::vector<Span>& spans) {
  Var fwd = Gru(g, m, x, Join(prefix, "gru_fwd"), spans, false);
  Var bwd = Gru(g, m, x, Join(prefix, "gru_bwd"), spans, true);
  return ConcatCols({fwd, bwd});
}

}  // namespace wst
