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

#ifndef WST_SYNTHESIS_H_
#define WST_SYNTHESIS_H_

#include <vector>

#include "wst/corpus.h"
#include "wst/encoders.h"
#include "wst/model.h"

namespace wst {

struct SynthesisResult {
  std::vector<int> durations;       // decoded per-phoneme frame counts
  Eigen::VectorXd log_durations;    // raw predictions, log(1 + d) scale
  Eigen::VectorXd sigmas;
  AcousticFeatures features;        // raw units
};

// Everything the decoder needs for a text, given a style sequence.
struct TextConditioning {
  Mat enc;
  Mat word_seq;
  Mat cond;
  Eigen::VectorXd log_durations;
  Eigen::VectorXd sigmas;
};

TextConditioning Condition(const Model& m, const PhonemeSequence& text,
                           const WordStyleEmbeddings& style);

// Free-running synthesis from predicted durations.
SynthesisResult Synthesize(const Model& m, const PhonemeSequence& text,
                           const WordStyleEmbeddings& style);

// Sum of exp(predicted log-duration) over phonemes: a continuous measure of
// total predicted length.
double PredictedLength(const Model& m, const PhonemeSequence& text,
                       const WordStyleEmbeddings& style);

// Reference embeddings, ground-truth durations and teacher forcing.
AcousticFeatures ReconstructTeacherForced(const Model& m, const Utterance& utt);

}  // namespace wst

#endif  // WST_SYNTHESIS_H_
