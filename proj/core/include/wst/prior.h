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

#ifndef WST_PRIOR_H_
#define WST_PRIOR_H_

#include <vector>

#include "wst/autodiff.h"
#include "wst/encoders.h"
#include "wst/layout.h"
#include "wst/model.h"

namespace wst {

// Word-level prior inputs: [word-averaged phoneme encodings, word sequence
// encodings], both behind a stop-gradient so the prior never trains them.
Var PriorInputs(Var enc, Var word_seq, const BatchLayout& layout);

struct PriorOutputs {
  Var predictions;  // n_words x token_dim
  Var loss;         // mean squared error against the stop-gradient targets
};

// Teacher-forced prediction: the step-w input is [inputs_w, target_{w-1}]
// with a zero vector before the first word of every utterance.
PriorOutputs PriorPredictTeacherForced(Graph& g, const Model& m, Var inputs,
                                       Var targets, const BatchLayout& layout);

// Autoregressive generation; predictions are fed back as the next input.
// `inputs` rows follow `utt_words`.
Mat PriorGenerate(const Model& m, const Mat& inputs, const std::vector<Span>& utt_words);

// ---- Single-utterance convenience wrappers ----------------------------------

Mat PriorInputs(const Model& m, const PhonemeSequence& text);

struct PriorTeacherForcedResult {
  Mat predictions;
  double loss = 0.0;
};
PriorTeacherForcedResult PriorPredictTeacherForced(const Model& m, const Mat& inputs,
                                                   const Mat& targets);
WordStyleEmbeddings PriorGenerate(const Model& m, const Mat& inputs);
WordStyleEmbeddings PriorEmbeddings(const Model& m, const PhonemeSequence& text);

}  // namespace wst

#endif  // WST_PRIOR_H_
