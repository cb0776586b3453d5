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

#ifndef WST_DECODER_H_
#define WST_DECODER_H_

#include <random>
#include <vector>

#include "wst/autodiff.h"
#include "wst/corpus.h"
#include "wst/encoders.h"
#include "wst/layout.h"
#include "wst/model.h"

namespace wst {

struct DurationOutputs {
  Var log_duration;  // n_phonemes x 1, regression target log(1 + d)
  Var sigma;         // n_phonemes x 1, > 0
};

DurationOutputs PredictDurations(Graph& g, const Model& m, Var cond);

// round(exp(l) - 1) clamped at 0, then the largest entry is raised to 1 if all
// entries are zero so that at least one frame is produced.
std::vector<int> DecodeDurations(const Eigen::VectorXd& log_duration);

// Gaussian upsampling of each utterance's phoneme rows to its frame span.
// With c_i = sum_{j<=i} d_j - d_i / 2, frame t weighs phoneme i by
// exp(-(t + 0.5 - c_i)^2 / (2 sigma_i^2)), normalized over i.
Var GaussianUpsample(Var cond, Var sigma, const BatchLayout& layout);

// Single-utterance forms.
Mat UpsampleWeights(const std::vector<int>& durations, const Eigen::VectorXd& sigmas);
Mat GaussianUpsample(const Mat& cond, const std::vector<int>& durations,
                     const Eigen::VectorXd& sigmas);

// Teacher-forced decoding in normalized feature space; `teacher` holds the
// normalized ground-truth frames and row t consumes frame t-1 (zero at t=0).
// Training-only regularizers. `prenet` is inverted dropout on both prenet
// layers; `pitch_feedback` is the per-utterance probability of replacing the
// pitch channels of the fed-back frames with their corpus mean.
struct DecoderDropout {
  double prenet = 0.0;
  double pitch_feedback = 0.0;
  std::mt19937_64* rng = nullptr;
};

Var DecodeTeacherForced(Graph& g, const Model& m, Var upsampled, Var teacher,
                        const BatchLayout& layout, const DecoderDropout& dropout = {});

// Free-running decoding: every step feeds back its own output. Returns
// normalized frames, one per upsampled row.
Mat DecodeFreeRunning(const Model& m, const Mat& upsampled,
                      const std::vector<Span>& utt_frames);

// Single-utterance decode_frames: teacher forcing when `teacher` is given.
// Inputs and outputs are in raw feature units.
AcousticFeatures DecodeFrames(const Model& m, const Mat& upsampled,
                              const AcousticFeatures* teacher = nullptr);

}  // namespace wst

#endif  // WST_DECODER_H_
