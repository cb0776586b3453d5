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

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "test_util.h"
#include "wst/encoders.h"
#include "wst/errors.h"
#include "wst/layout.h"

namespace wst {
namespace {

using testing::ParamGradientError;
using testing::RandomMat;
using testing::Text;
using testing::TinyConfig;

TEST(PhonemeEncodeTest, ShapeAndDeterminism) {
  Model m;
  PhonemeSequence t = Text("aa.b d eh.f");
  Mat a = PhonemeEncode(m, t);
  EXPECT_EQ(a.rows(), 5);
  EXPECT_EQ(a.cols(), 64);
  EXPECT_EQ(a, PhonemeEncode(m, t));
}

TEST(PhonemeEncodeTest, SwappingPhonemesChangesRows) {
  Model m;
  Mat a = PhonemeEncode(m, Text("aa.b.d eh"));
  Mat b = PhonemeEncode(m, Text("b.aa.d eh"));
  EXPECT_GT((a.row(0) - b.row(0)).norm(), 1e-6);
  // Context sensitivity: the unchanged last phoneme still sees the swap.
  EXPECT_GT((a.row(3) - b.row(3)).norm(), 0.0);
}

TEST(PhonemeEncodeTest, UnknownSymbolRejected) {
  Model m;
  PhonemeSequence t;
  t.phonemes = {"aa", "qq"};
  t.word_ids = {0, 0};
  EXPECT_THROW(PhonemeEncode(m, t), ValidationError);
}

TEST(WordAverageTest, Examples) {
  Mat enc(3, 2);
  enc << 1, 2, 3, 6, 5, 7;
  Mat single = WordAverage(enc, {0, 1, 2});
  EXPECT_EQ(single, enc);
  Mat pair = WordAverage(enc, {0, 0, 1});
  EXPECT_EQ(pair(0, 0), 2.0);
  EXPECT_EQ(pair(0, 1), 4.0);
  EXPECT_EQ(pair.row(1), enc.row(2));
}

TEST(WordAverageTest, GradientMatchesFiniteDifferences) {
  Model m(TinyConfig());
  PhonemeSequence t = Text("aa.b.d eh f.g");
  BatchLayout layout = BatchLayout::Build({&t});
  std::mt19937_64 rng(1);
  const Mat r = RandomMat(layout.num_words(), m.config().enc_dim, rng);
  auto loss = [&](Graph& g, const Model& mm) {
    return Sum(Mul(WordAverage(PhonemeEncode(g, mm, layout), layout), g.Constant(r)));
  };
  EXPECT_LT(ParamGradientError(m, "phoneme_encoder/embedding", loss), 1e-4);
}

TEST(ReferenceSummarizeTest, WordsOnlySeeTheirOwnFrames) {
  Model m;
  Utterance u = SynthesizeCorpus(1, 3).utterances[0];
  Mat base = ReferenceSummarize(m, u.features, u.durations, u.text.word_ids);
  ASSERT_EQ(base.rows(), u.text.num_words());
  EXPECT_EQ(base.cols(), 128);
  // Perturb the first frame of word 1; word 0 must not change.
  int first_word1 = 0;
  for (size_t i = 0; i < u.durations.size() && u.text.word_ids[i] == 0; ++i) {
    first_word1 += u.durations[i];
  }
  AcousticFeatures changed = u.features;
  changed.frames.row(first_word1).array() += 0.7;
  Mat out = ReferenceSummarize(m, changed, u.durations, u.text.word_ids);
  EXPECT_EQ(out.row(0), base.row(0));
  EXPECT_NE(out.row(1), base.row(1));
  for (int w = 2; w < out.rows(); ++w) EXPECT_EQ(out.row(w), base.row(w));
}

TEST(ReferenceSummarizeTest, IdenticalSpansGiveIdenticalSummaries) {
  Model m;
  Mat frames(8, kNumChannels);
  std::mt19937_64 rng(2);
  frames.topRows(4) = RandomMat(4, kNumChannels, rng);
  frames.bottomRows(4) = frames.topRows(4);
  Mat s = ReferenceSummarize(m, {frames}, {2, 2, 1, 3}, {0, 0, 1, 1});
  EXPECT_EQ(s.row(0), s.row(1));
}

TEST(ReferenceSummarizeTest, Errors) {
  Model m;
  EXPECT_THROW(ReferenceSummarize(m, {Mat(0, kNumChannels)}, {1}, {0}), ValidationError);
  EXPECT_THROW(ReferenceSummarize(m, {Mat::Zero(5, kNumChannels)}, {2, 2}, {0, 1}),
               ValidationError);
}

TEST(TokenAttendTest, EqualScoresGiveUniformWeights) {
  Model m;
  StyleTokenBank bank = m.token_bank();
  bank.w_query.setZero();
  std::mt19937_64 rng(3);
  auto r = TokenAttend(RandomMat(1, 128, rng), bank);
  for (int k = 0; k < 15; ++k) EXPECT_NEAR(r.weights(k), 1.0 / 15.0, 1e-15);
  EXPECT_LT((r.embedding - bank.tokens.colwise().mean()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(TokenAttendTest, SingleTokenBank) {
  Model m;
  StyleTokenBank bank = m.token_bank();
  bank.tokens = bank.tokens.topRows(1).eval();
  std::mt19937_64 rng(4);
  auto r = TokenAttend(RandomMat(1, 128, rng), bank);
  EXPECT_EQ(r.weights(0), 1.0);
  EXPECT_EQ(r.embedding, bank.tokens.row(0));
}

TEST(TokenAttendTest, HandSoftmaxExample) {
  // token_dim 4 gives a 1/2 score scale; score_0 = 2 ln 3 / 2 = ln 3.
  StyleTokenBank bank;
  bank.tokens = Mat::Zero(2, 4);
  bank.tokens(0, 0) = 1.0;
  bank.w_query = Mat::Identity(4, 4);
  bank.w_key = Mat::Identity(4, 4);
  RowVec q = RowVec::Zero(4);
  q(0) = 2.0 * std::log(3.0);
  auto r = TokenAttend(q, bank);
  EXPECT_NEAR(r.weights(0), 0.75, 1e-12);
  EXPECT_NEAR(r.weights(1), 0.25, 1e-12);
}

TEST(TokenAttendTest, GraphAndPlainFormsAgree) {
  Model m;
  std::mt19937_64 rng(5);
  Mat queries = RandomMat(3, 128, rng);
  Graph g(false);
  TokenAttention att = TokenAttend(g, m, g.Constant(queries));
  for (int i = 0; i < 3; ++i) {
    auto r = TokenAttend(queries.row(i), m.token_bank());
    EXPECT_LT((att.weights.value().row(i) - r.weights).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((att.embeddings.value().row(i) - r.embedding).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(TokenAttendTest, NonFiniteQueryRejected) {
  Model m;
  RowVec q = RowVec::Zero(128);
  q(3) = std::nan("");
  EXPECT_THROW(TokenAttend(q, m.token_bank()), ValidationError);
}

TEST(TokenAttendTest, ParameterGradientsMatchFiniteDifferences) {
  Model m(TinyConfig());
  std::mt19937_64 rng(6);
  const Mat queries = RandomMat(3, m.config().ref_dim, rng, 2.0);
  const Mat r = RandomMat(3, m.config().token_dim, rng);
  const Mat rw = RandomMat(3, m.config().num_tokens, rng);
  auto loss = [&](Graph& g, const Model& mm) {
    TokenAttention att = TokenAttend(g, mm, g.Constant(queries));
    return Add(Sum(Mul(att.embeddings, g.Constant(r))), Sum(Mul(att.weights, g.Constant(rw))));
  };
  for (const char* name : {"tokens/tokens", "tokens/w_query", "tokens/w_key"}) {
    EXPECT_LT(ParamGradientError(m, name, loss), 1e-4) << name;
  }
}

TEST(WordSequenceEncodeTest, ShapeAndBidirectionality) {
  Model m;
  PhonemeSequence one = Text("aa.b");
  Mat ws = WordSequenceEncode(m, PhonemeEncode(m, one), one.word_ids);
  EXPECT_EQ(ws.rows(), 1);
  EXPECT_EQ(ws.cols(), 32);

  PhonemeSequence fwd = Text("aa.b d eh"), rev = Text("eh d aa.b");
  Mat a = WordSequenceEncode(m, PhonemeEncode(m, fwd), fwd.word_ids);
  Mat b = WordSequenceEncode(m, PhonemeEncode(m, rev), rev.word_ids);
  EXPECT_GT((a.row(0) - b.row(2)).norm(), 1e-6);
}

TEST(WordSequenceEncodeTest, NoGradientReachesPhonemeEncoder) {
  Model m;
  PhonemeSequence t = Text("aa.b d eh.f.g");
  BatchLayout layout = BatchLayout::Build({&t});
  Graph g(true);
  Var enc = PhonemeEncode(g, m, layout);
  g.Backward(Sum(Square(WordSequenceEncode(g, m, enc, layout))));
  auto grads = g.ParamGrads();
  bool reached_own = false;
  for (const Parameter* p : m.params().All()) {
    auto it = grads.find(p);
    const bool nonzero = it != grads.end() && (it->second.array() != 0.0).any();
    if (p->name.rfind("phoneme_encoder/", 0) == 0) EXPECT_FALSE(nonzero) << p->name;
    if (p->name.rfind("word_sequence/", 0) == 0) reached_own |= nonzero;
  }
  EXPECT_TRUE(reached_own);
}

TEST(BuildConditioningTest, ReplicatesWordSlices) {
  Model m;
  PhonemeSequence t = Text("aa.b d.eh");
  Mat enc = PhonemeEncode(m, t);
  Mat ws = WordSequenceEncode(m, enc, t.word_ids);
  std::mt19937_64 rng(7);
  Mat style = RandomMat(2, 128, rng);
  Mat cond = BuildConditioning(enc, ws, style, t.word_ids);
  ASSERT_EQ(cond.rows(), 4);
  ASSERT_EQ(cond.cols(), 224);
  for (int i = 0; i < 4; ++i) {
    const int w = t.word_ids[i];
    EXPECT_EQ(cond.row(i).leftCols(64), enc.row(i));
    EXPECT_EQ(cond.row(i).segment(64, 32), ws.row(w));
    EXPECT_EQ(cond.row(i).rightCols(128), style.row(w));
  }
  EXPECT_EQ(cond.row(0).rightCols(160), cond.row(1).rightCols(160));
  EXPECT_NE(cond.row(1).rightCols(128), cond.row(2).rightCols(128));
  EXPECT_THROW(BuildConditioning(enc, ws, style.topRows(1), t.word_ids), ValidationError);
}

TEST(ReferenceEmbeddingsTest, WeightsOnTheSimplex) {
  Model m;
  Utterance u = SynthesizeCorpus(1, 8).utterances[0];
  WordStyleEmbeddings e = ReferenceEmbeddings(m, u);
  ASSERT_TRUE(e.weights.has_value());
  EXPECT_EQ(e.num_words(), u.text.num_words());
  for (int w = 0; w < e.num_words(); ++w) {
    EXPECT_NEAR(e.weights->row(w).sum(), 1.0, 1e-12);
    EXPECT_GE(e.weights->row(w).minCoeff(), 0.0);
  }
  Mat recon = *e.weights * m.token_bank().tokens;
  EXPECT_LT((recon - e.embeddings).cwiseAbs().maxCoeff(), 1e-12);
}

}  // namespace
}  // namespace wst
