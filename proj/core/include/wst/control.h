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

#ifndef WST_CONTROL_H_
#define WST_CONTROL_H_

#include <optional>
#include <string>
#include <vector>

#include "wst/corpus.h"
#include "wst/encoders.h"
#include "wst/model.h"

namespace wst {

// Runs the reference summarizer and token attention over every word of the
// corpus and aggregates each token's weight mean and population std.
TokenWeightStats ComputeTokenStats(const Model& m, const std::vector<Utterance>& corpus);

// Same aggregation from explicit weight rows [n_words x num_tokens].
TokenWeightStats TokenStatsFromWeights(const Mat& weights);

// Word selection for biasing: nullopt means every word.
using WordSelection = std::optional<std::vector<int>>;

// embedding_w += amount * max(std_token, 1e-6) * token_vector for each
// selected word.
// The result no longer carries simplex weights.
WordStyleEmbeddings BiasEmbeddings(const WordStyleEmbeddings& style, int token_id,
                                   double amount, const WordSelection& words,
                                   const StyleTokenBank& bank,
                                   const TokenWeightStats& stats);

// One bias instruction: TOKEN:STDS[:WORD].
struct BiasSpec {
  int token_id = 0;
  double amount_stds = 0.0;
  std::optional<int> word_index;  // nullopt: all words
};

// Parses "3:+2", "7:-1:4". Throws ValidationError on malformed input.
BiasSpec ParseBiasSpec(const std::string& text, int num_tokens);

WordStyleEmbeddings ApplyBiases(const WordStyleEmbeddings& style,
                                const std::vector<BiasSpec>& biases,
                                const StyleTokenBank& bank, const TokenWeightStats& stats);

// Word w of the result is alpha * source[w] + (1 - alpha) * prior[w]; target
// words beyond the source's word count keep the prior embedding.
WordStyleEmbeddings MixStyles(const WordStyleEmbeddings& source,
                              const WordStyleEmbeddings& prior, double alpha);

// Transfers the style of `source`'s audio onto `target_text`.
WordStyleEmbeddings StyleTransfer(const Model& m, const Utterance& source,
                                  const PhonemeSequence& target_text, double alpha);

}  // namespace wst

#endif  // WST_CONTROL_H_
