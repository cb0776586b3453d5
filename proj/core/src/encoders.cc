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

#include "wst/encoders.h"

#include <cmath>

#include "wst/errors.h"

namespace wst {

namespace {

BatchLayout SingleLayout(const PhonemeSequence& text,
                         const std::vector<int>* durations = nullptr) {
  std::vector<std::vector<int>> d;
  if (durations != nullptr) d.push_back(*durations);
  return BatchLayout::Build({&text}, d);
}

// Builds a minimal phoneme sequence for a word partition so that layout
// bookkeeping can be reused where only word_ids are known.
PhonemeSequence PlaceholderText(const std::vector<int>& word_ids) {
  PhonemeSequence t;
  t.word_ids = word_ids;
  t.phonemes.assign(word_ids.size(), std::string(PhonemeInventory::Symbol(0)));
  return t;
}

}  // namespace

Var PhonemeEncode(Graph& g, const Model& m, const BatchLayout& layout) {
  Var table = g.Param(m.P("phoneme_encoder/embedding"));
  Var emb = GatherRows(table, layout.phoneme_ids);
  Var conv = Relu(Conv1d(g, m, emb, "phoneme_encoder/conv", layout.utt_phonemes));
  return BiGru(g, m, conv, "phoneme_encoder", layout.utt_phonemes);
}

Var WordAverage(Var enc, const BatchLayout& layout) {
  return SegmentMean(enc, layout.phoneme_word, layout.num_words());
}

Var ReferenceSummarize(Graph& g, const Model& m, Var frames, const BatchLayout& layout) {
  if (!layout.has_frames()) throw ValidationError("reference needs durations");
  if (frames.rows() != layout.num_frames()) {
    throw ValidationError("duration sum does not match frame count");
  }
  if (frames.rows() == 0) throw ValidationError("reference has no frames");
  for (const Span& s : layout.word_frames) {
    if (s.length == 0) throw ValidationError("word without frames");
  }
  Var h1 = Relu(Conv1d(g, m, frames, "reference/conv1", layout.word_frames));
  Var h2 = Relu(Conv1d(g, m, h1, "reference/conv2", layout.word_frames));
  Var states = Gru(g, m, h2, "reference/gru", layout.word_frames);
  return GatherRows(states, LastRows(layout.word_frames));
}

TokenAttention TokenAttend(Graph& g, const Model& m, Var queries) {
  Var tokens = g.Param(m.P("tokens/tokens"));
  Var q = MatMul(queries, g.Param(m.P("tokens/w_query")));
  Var k = MatMul(tokens, g.Param(m.P("tokens/w_key")));
  const double scale = 1.0 / std::sqrt(static_cast<double>(m.config().token_dim));
  Var weights = SoftmaxRows(Scale(MatMulTransB(q, k), scale));
  return {weights, MatMul(weights, tokens)};
}

Var WordSequenceEncode(Graph& g, const Model& m, Var enc, const BatchLayout& layout) {
  Var proj = Linear(g, m, StopGradient(enc), "word_sequence/proj");
  Var words = WordAverage(proj, layout);
  return BiGru(g, m, words, "word_sequence", layout.utt_words);
}

Var BuildConditioning(Var enc, Var word_seq, Var style, const BatchLayout& layout) {
  if (enc.rows() != layout.num_phonemes() || word_seq.rows() != layout.num_words() ||
      style.rows() != layout.num_words()) {
    throw ValidationError("conditioning inputs disagree with the word partition");
  }
  return ConcatCols({enc, GatherRows(word_seq, layout.phoneme_word),
                     GatherRows(style, layout.phoneme_word)});
}

Mat PhonemeEncode(const Model& m, const PhonemeSequence& text) {
  BatchLayout layout = SingleLayout(text);
  Graph g(false);
  return PhonemeEncode(g, m, layout).value();
}

Mat WordAverage(const Mat& enc, const std::vector<int>& word_ids) {
  PhonemeSequence t = PlaceholderText(word_ids);
  BatchLayout layout = SingleLayout(t);
  if (enc.rows() != layout.num_phonemes()) {
    throw ValidationError("encoding rows differ from word_ids length");
  }
  Graph g(false);
  return WordAverage(g.Constant(enc), layout).value();
}

Mat ReferenceSummarize(const Model& m, const AcousticFeatures& features,
                       const std::vector<int>& durations,
                       const std::vector<int>& word_ids) {
  if (features.num_frames() == 0) throw ValidationError("reference has no frames");
  PhonemeSequence t = PlaceholderText(word_ids);
  BatchLayout layout = SingleLayout(t, &durations);
  Graph g(false);
  Var frames = g.Constant(m.NormalizeFeatures(features.frames));
  return ReferenceSummarize(g, m, frames, layout).value();
}

TokenAttendResult TokenAttend(const RowVec& query, const StyleTokenBank& bank) {
  if (!query.allFinite()) throw ValidationError("query must be finite");
  const RowVec q = query * bank.w_query;
  const Mat k = bank.tokens * bank.w_key;
  const double scale = 1.0 / std::sqrt(static_cast<double>(bank.tokens.cols()));
  RowVec scores = (k * q.transpose()).transpose() * scale;
  scores.array() -= scores.maxCoeff();
  RowVec w = scores.array().exp();
  w /= w.sum();
  return {w, w * bank.tokens};
}

Mat WordSequenceEncode(const Model& m, const Mat& enc, const std::vector<int>& word_ids) {
  PhonemeSequence t = PlaceholderText(word_ids);
  BatchLayout layout = SingleLayout(t);
  Graph g(false);
  return WordSequenceEncode(g, m, g.Constant(enc), layout).value();
}

Mat BuildConditioning(const Mat& enc, const Mat& word_seq, const Mat& style,
                      const std::vector<int>& word_ids) {
  PhonemeSequence t = PlaceholderText(word_ids);
  BatchLayout layout = SingleLayout(t);
  Graph g(false);
  return BuildConditioning(g.Constant(enc), g.Constant(word_seq), g.Constant(style),
                           layout)
      .value();
}

WordStyleEmbeddings ReferenceEmbeddings(const Model& m, const Utterance& utt) {
  utt.Validate();
  BatchLayout layout = SingleLayout(utt.text, &utt.durations);
  Graph g(false);
  Var frames = g.Constant(m.NormalizeFeatures(utt.features.frames));
  TokenAttention att = TokenAttend(g, m, ReferenceSummarize(g, m, frames, layout));
  return {att.embeddings.value(), att.weights.value()};
}

}  // namespace wst
