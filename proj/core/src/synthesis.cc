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

#include "wst/synthesis.h"

#include "wst/decoder.h"
#include "wst/errors.h"
#include "wst/layout.h"

namespace wst {

TextConditioning Condition(const Model& m, const PhonemeSequence& text,
                           const WordStyleEmbeddings& style) {
  if (style.num_words() != text.num_words() ||
      style.embeddings.cols() != m.config().token_dim) {
    throw ValidationError("style embeddings do not match the text's words");
  }
  BatchLayout layout = BatchLayout::Build({&text});
  Graph g(false);
  Var enc = PhonemeEncode(g, m, layout);
  Var ws = WordSequenceEncode(g, m, enc, layout);
  Var cond = BuildConditioning(enc, ws, g.Constant(style.embeddings), layout);
  DurationOutputs dur = PredictDurations(g, m, cond);
  return {enc.value(), ws.value(), cond.value(), dur.log_duration.value().col(0),
          dur.sigma.value().col(0)};
}

SynthesisResult Synthesize(const Model& m, const PhonemeSequence& text,
                           const WordStyleEmbeddings& style) {
  TextConditioning tc = Condition(m, text, style);
  SynthesisResult r;
  r.log_durations = tc.log_durations;
  r.sigmas = tc.sigmas;
  r.durations = DecodeDurations(tc.log_durations);
  Mat ups = GaussianUpsample(tc.cond, r.durations, tc.sigmas);
  r.features = DecodeFrames(m, ups);
  return r;
}

double PredictedLength(const Model& m, const PhonemeSequence& text,
                       const WordStyleEmbeddings& style) {
  return Condition(m, text, style).log_durations.array().exp().sum();
}

AcousticFeatures ReconstructTeacherForced(const Model& m, const Utterance& utt) {
  utt.Validate();
  BatchLayout layout = BatchLayout::Build({&utt.text}, {utt.durations});
  Graph g(false);
  Var frames = g.Constant(m.NormalizeFeatures(utt.features.frames));
  Var enc = PhonemeEncode(g, m, layout);
  Var ws = WordSequenceEncode(g, m, enc, layout);
  TokenAttention att = TokenAttend(g, m, ReferenceSummarize(g, m, frames, layout));
  Var cond = BuildConditioning(enc, ws, att.embeddings, layout);
  DurationOutputs dur = PredictDurations(g, m, cond);
  Var ups = GaussianUpsample(cond, dur.sigma, layout);
  Var out = DecodeTeacherForced(g, m, ups, frames, layout);
  return {m.DenormalizeFeatures(out.value())};
}

}  // namespace wst
