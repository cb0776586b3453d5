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

#ifndef WST_LAYOUT_H_
#define WST_LAYOUT_H_

#include <vector>

#include "wst/autodiff.h"
#include "wst/corpus.h"

namespace wst {

// Index bookkeeping for a packed batch: the phonemes, words and frames of all
// utterances are stacked row-wise and every op works on those stacks.
struct BatchLayout {
  std::vector<Span> utt_phonemes;
  std::vector<Span> utt_words;
  std::vector<Span> utt_frames;   // empty when no durations are known
  std::vector<Span> word_phonemes;
  std::vector<Span> word_frames;  // empty when no durations are known
  std::vector<int> phoneme_word;  // global word row of each phoneme row
  std::vector<int> phoneme_ids;   // inventory index of each phoneme row
  std::vector<int> durations;     // per phoneme row; empty when unknown

  int num_utterances() const { return static_cast<int>(utt_phonemes.size()); }
  int num_phonemes() const { return static_cast<int>(phoneme_word.size()); }
  int num_words() const { return static_cast<int>(word_phonemes.size()); }
  int num_frames() const;
  bool has_frames() const { return !utt_frames.empty(); }

  // `durations` is either empty or holds one duration vector per text.
  static BatchLayout Build(const std::vector<const PhonemeSequence*>& texts,
                           const std::vector<std::vector<int>>& durations = {});
};

std::vector<Sequence> ToSequences(const std::vector<Span>& spans, bool reverse = false);
// Row r maps to r + offset when both lie in the same span, else -1.
std::vector<int> ShiftWithinSpans(const std::vector<Span>& spans, int total_rows,
                                  int offset);
// Last row of each span.
std::vector<int> LastRows(const std::vector<Span>& spans);
// Segment id of every row covered by `spans` (spans must tile the rows).
std::vector<int> SegmentIds(const std::vector<Span>& spans);

}  // namespace wst

#endif  // WST_LAYOUT_H_
