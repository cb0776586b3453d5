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

#include "wst/control.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "wst/errors.h"
#include "wst/prior.h"

namespace wst {

TokenWeightStats TokenStatsFromWeights(const Mat& weights) {
  if (weights.rows() == 0) throw ValidationError("no words to aggregate");
  TokenWeightStats s;
  const double n = static_cast<double>(weights.rows());
  for (Eigen::Index k = 0; k < weights.cols(); ++k) {
    const double mean = weights.col(k).sum() / n;
    const double var = (weights.col(k).array() - mean).square().sum() / n;
    s.mean.push_back(mean);
    s.std.push_back(std::sqrt(var));
  }
  return s;
}

TokenWeightStats ComputeTokenStats(const Model& m, const std::vector<Utterance>& corpus) {
  if (corpus.empty()) throw ValidationError("empty corpus");
  int total_words = 0;
  for (const Utterance& u : corpus) total_words += u.text.num_words();
  Mat all(total_words, m.config().num_tokens);
  int row = 0;
  for (const Utterance& u : corpus) {
    WordStyleEmbeddings e = ReferenceEmbeddings(m, u);
    all.middleRows(row, e.num_words()) = *e.weights;
    row += e.num_words();
  }
  return TokenStatsFromWeights(all);
}

WordStyleEmbeddings BiasEmbeddings(const WordStyleEmbeddings& style, int token_id,
                                   double amount, const WordSelection& words,
                                   const StyleTokenBank& bank,
                                   const TokenWeightStats& stats) {
  if (token_id < 0 || token_id >= bank.num_tokens() || token_id >= stats.num_tokens()) {
    throw ValidationError("token id out of range");
  }
  if (bank.tokens.cols() != style.embeddings.cols()) {
    throw ValidationError("token and embedding widths differ");
  }
  WordStyleEmbeddings out{style.embeddings, std::nullopt};
  const double std = std::max(stats.std[token_id], kStdFloor);
  const RowVec delta = amount * std * bank.tokens.row(token_id);
  if (!words) {
    out.embeddings.rowwise() += delta;
    return out;
  }
  for (int w : *words) {
    if (w < 0 || w >= style.num_words()) {
      throw ValidationError("word index " + std::to_string(w) + " out of range");
    }
    out.embeddings.row(w) += delta;
  }
  return out;
}

BiasSpec ParseBiasSpec(const std::string& text, int num_tokens) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(item);
  if (!text.empty() && text.back() == ':') parts.push_back("");
  if (parts.size() < 2 || parts.size() > 3) {
    throw ValidationError("bias spec must be TOKEN:STDS[:WORD], got '" + text + "'");
  }
  auto parse_int = [&](const std::string& s) {
    int v = 0;
    const char* b = s.data();
    const char* e = b + s.size();
    auto [p, ec] = std::from_chars(b, e, v);
    if (s.empty() || ec != std::errc() || p != e) {
      throw ValidationError("bad integer '" + s + "' in bias spec '" + text + "'");
    }
    return v;
  };
  BiasSpec spec;
  spec.token_id = parse_int(parts[0]);
  if (spec.token_id < 0 || spec.token_id >= num_tokens) {
    throw ValidationError("token id out of range in bias spec '" + text + "'");
  }
  {
    std::string s = parts[1];
    if (!s.empty() && s[0] == '+') s.erase(0, 1);
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v)) {
      throw ValidationError("bad amount in bias spec '" + text + "'");
    }
    spec.amount_stds = v;
  }
  if (parts.size() == 3) {
    spec.word_index = parse_int(parts[2]);
    if (*spec.word_index < 0) throw ValidationError("negative word index in '" + text + "'");
  }
  return spec;
}

WordStyleEmbeddings ApplyBiases(const WordStyleEmbeddings& style,
                                const std::vector<BiasSpec>& biases,
                                const StyleTokenBank& bank, const TokenWeightStats& stats) {
  WordStyleEmbeddings out = style;
  for (const BiasSpec& b : biases) {
    WordSelection sel;
    if (b.word_index) sel = std::vector<int>{*b.word_index};
    out = BiasEmbeddings(out, b.token_id, b.amount_stds, sel, bank, stats);
  }
  return out;
}

WordStyleEmbeddings MixStyles(const WordStyleEmbeddings& source,
                              const WordStyleEmbeddings& prior, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ValidationError("alpha must lie in [0, 1]");
  if (source.num_words() == 0 || prior.num_words() == 0) {
    throw ValidationError("empty source or target");
  }
  if (source.embeddings.cols() != prior.embeddings.cols()) {
    throw ValidationError("embedding widths differ");
  }
  WordStyleEmbeddings out{prior.embeddings, std::nullopt};
  const int shared = std::min(source.num_words(), prior.num_words());
  for (int w = 0; w < shared; ++w) {
    if (alpha == 1.0) {
      out.embeddings.row(w) = source.embeddings.row(w);
    } else if (alpha != 0.0) {
      out.embeddings.row(w) =
          alpha * source.embeddings.row(w) + (1.0 - alpha) * prior.embeddings.row(w);
    }
  }
  return out;
}

WordStyleEmbeddings StyleTransfer(const Model& m, const Utterance& source,
                                  const PhonemeSequence& target_text, double alpha) {
  if (source.text.phonemes.empty() || target_text.phonemes.empty()) {
    throw ValidationError("empty source or target");
  }
  return MixStyles(ReferenceEmbeddings(m, source), PriorEmbeddings(m, target_text), alpha);
}

}  // namespace wst
