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

#include "wst/layout.h"

#include "wst/errors.h"

namespace wst {

int BatchLayout::num_frames() const {
  return utt_frames.empty() ? 0 : utt_frames.back().end();
}

BatchLayout BatchLayout::Build(const std::vector<const PhonemeSequence*>& texts,
                               const std::vector<std::vector<int>>& durations) {
  if (!durations.empty() && durations.size() != texts.size()) {
    throw ValidationError("one duration vector per utterance required");
  }
  BatchLayout l;
  int word_base = 0, frame = 0;
  for (size_t u = 0; u < texts.size(); ++u) {
    const PhonemeSequence& text = *texts[u];
    text.Validate();
    const int p0 = l.num_phonemes();
    const int nw = text.num_words();
    l.utt_phonemes.push_back({p0, text.num_phonemes()});
    l.utt_words.push_back({word_base, nw});
    for (int w = 0; w < nw; ++w) l.word_phonemes.push_back({0, 0});
    const std::vector<int> ids = text.PhonemeIndices();
    const int frame0 = frame;
    for (int i = 0; i < text.num_phonemes(); ++i) {
      const int gw = word_base + text.word_ids[i];
      Span& ws = l.word_phonemes[gw];
      if (ws.length == 0) ws.begin = p0 + i;
      ws.length += 1;
      l.phoneme_word.push_back(gw);
      l.phoneme_ids.push_back(ids[i]);
    }
    if (!durations.empty()) {
      const std::vector<int>& d = durations[u];
      if (static_cast<int>(d.size()) != text.num_phonemes()) {
        throw ValidationError("duration count differs from phoneme count");
      }
      for (int w = 0; w < nw; ++w) l.word_frames.push_back({0, 0});
      for (int i = 0; i < text.num_phonemes(); ++i) {
        if (d[i] < 0) throw ValidationError("negative duration");
        Span& wf = l.word_frames[word_base + text.word_ids[i]];
        if (wf.length == 0 && (i == 0 || text.word_ids[i] != text.word_ids[i - 1])) {
          wf.begin = frame;
        }
        wf.length += d[i];
        frame += d[i];
        l.durations.push_back(d[i]);
      }
      l.utt_frames.push_back({frame0, frame - frame0});
    }
    word_base += nw;
  }
  return l;
}

std::vector<Sequence> ToSequences(const std::vector<Span>& spans, bool reverse) {
  std::vector<Sequence> out;
  out.reserve(spans.size());
  for (const Span& s : spans) out.push_back({s.begin, s.length, reverse});
  return out;
}

std::vector<int> ShiftWithinSpans(const std::vector<Span>& spans, int total_rows,
                                  int offset) {
  std::vector<int> index(total_rows, -1);
  for (const Span& s : spans) {
    for (int r = s.begin; r < s.end(); ++r) {
      int src = r + offset;
      if (src >= s.begin && src < s.end()) index[r] = src;
    }
  }
  return index;
}

std::vector<int> LastRows(const std::vector<Span>& spans) {
  std::vector<int> out;
  out.reserve(spans.size());
  for (const Span& s : spans) out.push_back(s.length > 0 ? s.end() - 1 : -1);
  return out;
}

std::vector<int> SegmentIds(const std::vector<Span>& spans) {
  std::vector<int> ids;
  for (size_t k = 0; k < spans.size(); ++k) {
    for (int r = 0; r < spans[k].length; ++r) ids.push_back(static_cast<int>(k));
  }
  return ids;
}

}  // namespace wst
