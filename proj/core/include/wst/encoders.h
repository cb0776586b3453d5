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

#ifndef WST_ENCODERS_H_
#define WST_ENCODERS_H_

#include <optional>
#include <vector>

#include "wst/autodiff.h"
#include "wst/corpus.h"
#include "wst/layout.h"
#include "wst/model.h"

namespace wst {

// Per-word style vectors. `weights` is present only when every row is a
// softmax combination of the token bank.
struct WordStyleEmbeddings {
  Mat embeddings;              // n_words x token_dim
  std::optional<Mat> weights;  // n_words x num_tokens

  int num_words() const { return static_cast<int>(embeddings.rows()); }
};

struct TokenAttention {
  Var weights;
  Var embeddings;
};

// ---- Graph-level (packed batch) encoders ------------------------------------

// [n_phonemes x enc_dim]
Var PhonemeEncode(Graph& g, const Model& m, const BatchLayout& layout);
// Mean of the phoneme rows belonging to each word.
Var WordAverage(Var enc, const BatchLayout& layout);
// `frames` are normalized features [n_frames x 22]. Each word's summary is
// computed from that word's frame span alone.
Var ReferenceSummarize(Graph& g, const Model& m, Var frames, const BatchLayout& layout);
TokenAttention TokenAttend(Graph& g, const Model& m, Var queries);
// Stop-gradient on `enc`, projection, word averaging, bidirectional GRU.
Var WordSequenceEncode(Graph& g, const Model& m, Var enc, const BatchLayout& layout);
// Row i = [enc_i, word_seq[w(i)], style[w(i)]].
Var BuildConditioning(Var enc, Var word_seq, Var style, const BatchLayout& layout);

// ---- Single-utterance convenience wrappers ----------------------------------

Mat PhonemeEncode(const Model& m, const PhonemeSequence& text);
Mat WordAverage(const Mat& enc, const std::vector<int>& word_ids);
Mat ReferenceSummarize(const Model& m, const AcousticFeatures& features,
                       const std::vector<int>& durations,
                       const std::vector<int>& word_ids);
// Softmax attention of one query over the bank; returns weights and embedding.
struct TokenAttendResult {
  RowVec weights;
  RowVec embedding;
};
TokenAttendResult TokenAttend(const RowVec& query, const StyleTokenBank& bank);
Mat WordSequenceEncode(const Model& m, const Mat& enc, const std::vector<int>& word_ids);
Mat BuildConditioning(const Mat& enc, const Mat& word_seq, const Mat& style,
                      const std::vector<int>& word_ids);

// Style embeddings of an utterance computed from its own audio.
WordStyleEmbeddings ReferenceEmbeddings(const Model& m, const Utterance& utt);

}  // namespace wst

#endif  // WST_ENCODERS_H_
