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

#include "wst/prior.h"

#include "wst/errors.h"

namespace wst {

Var PriorInputs(Var enc, Var word_seq, const BatchLayout& layout) {
  return ConcatCols({WordAverage(StopGradient(enc), layout), StopGradient(word_seq)});
}

PriorOutputs PriorPredictTeacherForced(Graph& g, const Model& m, Var inputs,
                                       Var targets, const BatchLayout& layout) {
  if (inputs.rows() != targets.rows() || inputs.rows() != layout.num_words()) {
    throw ValidationError("prior inputs and targets differ in length");
  }
  Var target = StopGradient(targets);
  Var previous = GatherRows(target, ShiftWithinSpans(layout.utt_words, target.rows(), -1));
  Var states = Gru(g, m, ConcatCols({inputs, previous}), "prior/gru", layout.utt_words);
  Var pred = Linear(g, m, states, "prior/out");
  Var loss = Mean(Square(Sub(pred, target)));
  return {pred, loss};
}

Mat PriorGenerate(const Model& m, const Mat& inputs, const std::vector<Span>& utt_words) {
  const ModelConfig& c = m.config();
  if (inputs.cols() != c.prior_input_dim()) {
    throw ValidationError("prior inputs have the wrong width");
  }
  const Mat& w_in = m.P("prior/gru/w_input").value;
  const RowVec b_in = m.P("prior/gru/b_input").value.row(0);
  const Mat& w_h = m.P("prior/gru/w_hidden").value;
  const RowVec b_h = m.P("prior/gru/b_hidden").value.row(0);
  const Mat& w_out = m.P("prior/out/w").value;
  const RowVec b_out = m.P("prior/out/b").value.row(0);
  const int in_dim = c.prior_input_dim();

  Mat out(inputs.rows(), c.token_dim);
  for (const Span& s : utt_words) {
    Mat h = Mat::Zero(1, c.prior_dim);
    RowVec prev = RowVec::Zero(c.token_dim);
    for (int w = s.begin; w < s.end(); ++w) {
      Mat xp = inputs.row(w) * w_in.topRows(in_dim) + prev * w_in.bottomRows(c.token_dim);
      xp += b_in;
      h = GruCellStep(xp, h, w_h, b_h);
      RowVec pred = h * w_out;
      pred += b_out;
      out.row(w) = pred;
      prev = pred;
    }
  }
  return out;
}

Mat PriorInputs(const Model& m, const PhonemeSequence& text) {
  BatchLayout layout = BatchLayout::Build({&text});
  Graph g(false);
  Var enc = PhonemeEncode(g, m, layout);
  Var ws = WordSequenceEncode(g, m, enc, layout);
  return PriorInputs(enc, ws, layout).value();
}

namespace {

std::vector<Span> OneUtterance(int n_words) { return {Span{0, n_words}}; }

BatchLayout WordOnlyLayout(int n_words) {
  PhonemeSequence t;
  for (int w = 0; w < n_words; ++w) {
    t.phonemes.emplace_back(PhonemeInventory::Symbol(0));
    t.word_ids.push_back(w);
  }
  return BatchLayout::Build({&t});
}

}  // namespace

PriorTeacherForcedResult PriorPredictTeacherForced(const Model& m, const Mat& inputs,
                                                   const Mat& targets) {
  if (inputs.rows() != targets.rows() || inputs.rows() < 1) {
    throw ValidationError("prior inputs and targets differ in length");
  }
  BatchLayout layout = WordOnlyLayout(static_cast<int>(inputs.rows()));
  Graph g(false);
  PriorOutputs out =
      PriorPredictTeacherForced(g, m, g.Constant(inputs), g.Constant(targets), layout);
  return {out.predictions.value(), out.loss.value()(0, 0)};
}

WordStyleEmbeddings PriorGenerate(const Model& m, const Mat& inputs) {
  return {PriorGenerate(m, inputs, OneUtterance(static_cast<int>(inputs.rows()))),
          std::nullopt};
}

WordStyleEmbeddings PriorEmbeddings(const Model& m, const PhonemeSequence& text) {
  return PriorGenerate(m, PriorInputs(m, text));
}

}  // namespace wst
