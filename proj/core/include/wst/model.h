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

#ifndef WST_MODEL_H_
#define WST_MODEL_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wst/autodiff.h"

namespace wst {

struct ModelConfig {
  int num_tokens = 15;
  int token_dim = 128;
  int phoneme_embed_dim = 64;
  int enc_dim = 64;        // phoneme encoder output (bidirectional, even)
  int word_seq_dim = 32;   // word sequence encoder output (bidirectional, even)
  int ref_dim = 128;       // reference summary, also the summarizer state size
  int ref_conv_channels = 32;
  int attention_dim = 128;
  int duration_hidden = 64;
  int prenet_dim = 32;
  int decoder_dim = 128;
  int prior_dim = 256;
  bool fixed_sigma = false;
  double fixed_sigma_value = 1.5;
  double min_sigma = 0.05;
  std::uint64_t seed = 1;

  int cond_dim() const { return enc_dim + word_seq_dim + token_dim; }
  int prior_input_dim() const { return enc_dim + word_seq_dim; }
  void Validate() const;
};

// Named parameter arrays in insertion order. Copying deep-copies values.
class ParameterStore {
 public:
  ParameterStore() = default;
  ParameterStore(const ParameterStore& other);
  ParameterStore& operator=(const ParameterStore& other);
  ParameterStore(ParameterStore&&) = default;
  ParameterStore& operator=(ParameterStore&&) = default;

  Parameter& Add(std::string name, Mat value, bool trainable = true);
  Parameter& Get(std::string_view name);
  const Parameter& Get(std::string_view name) const;
  bool Contains(std::string_view name) const;

  std::vector<Parameter*> All();
  std::vector<const Parameter*> All() const;
  size_t size() const { return params_.size(); }
  size_t NumValues() const;

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
};

// Corpus mean and population std of each token's attention weight.
struct TokenWeightStats {
  std::vector<double> mean;
  std::vector<double> std;

  int num_tokens() const { return static_cast<int>(mean.size()); }
};

// Token matrix and attention projections, copied out of a model.
struct StyleTokenBank {
  Mat tokens;   // num_tokens x token_dim
  Mat w_query;  // ref_dim x attention_dim
  Mat w_key;    // token_dim x attention_dim

  int num_tokens() const { return static_cast<int>(tokens.rows()); }
};

// Every parameter of the three encoders, the duration predictor, the frame
// decoder and the prior lives in one store under a module prefix.
class Model {
 public:
  static constexpr std::string_view kPriorPrefix = "prior/";

  explicit Model(const ModelConfig& config = {});

  const ModelConfig& config() const { return config_; }
  ParameterStore& params() { return params_; }
  const ParameterStore& params() const { return params_; }
  const Parameter& P(std::string_view name) const { return params_.Get(name); }

  static bool IsPriorParameter(const Parameter& p);

  // Per-channel feature normalization (non-trainable "norm/*" parameters).
  void SetFeatureNormalization(const RowVec& mean, const RowVec& std);
  Mat NormalizeFeatures(const Mat& frames) const;
  Mat DenormalizeFeatures(const Mat& normalized) const;

  StyleTokenBank token_bank() const;

  std::optional<TokenWeightStats> token_stats;

 private:
  void Init();

  ModelConfig config_;
  ParameterStore params_;
};

// ---- Layer helpers shared by the module implementations -------------------

Var Linear(Graph& g, const Model& m, Var x, std::string_view prefix);
// Kernel-3 convolution over rows, zero-padded at the edges of every span.
Var Conv1d(Graph& g, const Model& m, Var x, std::string_view prefix,
           const std::vector<Span>& spans);
Var Gru(Graph& g, const Model& m, Var x, std::string_view prefix,
        const std::vector<Span>& spans, bool reverse = false);
Var BiGru(Graph& g, const Model& m, Var x, std::string_view prefix,
          const std::vector<Span>& spans);

}  // namespace wst

#endif  // WST_MODEL_H_
