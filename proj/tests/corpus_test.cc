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

#include <algorithm>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "json.hpp"

#include "test_util.h"
#include "wst/corpus.h"
#include "wst/errors.h"

namespace wst {
namespace {

namespace fs = std::filesystem;
using testing::TempDir;

std::string ReadBytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST(PhonemeInventoryTest, FortySymbolsSplitIntoClasses) {
  int vowels = 0;
  for (int i = 0; i < PhonemeInventory::kSize; ++i) {
    auto sym = PhonemeInventory::Symbol(i);
    EXPECT_EQ(PhonemeInventory::Index(sym), i);
    vowels += PhonemeInventory::IsVowel(i);
  }
  EXPECT_EQ(vowels, 15);
  EXPECT_FALSE(PhonemeInventory::Index("xx").has_value());
}

TEST(PhonemeSequenceTest, ParsesWordsAndPhonemes) {
  PhonemeSequence s = ParsePhonemeLine("hh.ah.l.ow w.er.l.d");
  EXPECT_EQ(s.num_phonemes(), 8);
  EXPECT_EQ(s.num_words(), 2);
  EXPECT_EQ(s.word_ids, (std::vector<int>{0, 0, 0, 0, 1, 1, 1, 1}));
  EXPECT_EQ(FormatPhonemeLine(s), "hh.ah.l.ow w.er.l.d");
}

TEST(PhonemeSequenceTest, RejectsBrokenPartitions) {
  PhonemeSequence s;
  s.phonemes = {"aa", "b", "d"};
  s.word_ids = {0, 2, 2};
  EXPECT_THROW(s.Validate(), ValidationError);
  s.word_ids = {1, 1, 1};
  EXPECT_THROW(s.Validate(), ValidationError);
  s.word_ids = {0, 1, 0};
  EXPECT_THROW(s.Validate(), ValidationError);
  s.word_ids = {0, 0, 1};
  EXPECT_NO_THROW(s.Validate());
  EXPECT_THROW(ParsePhonemeLine("aa.qq"), ValidationError);
  EXPECT_THROW(ParsePhonemeLine("aa..b"), ValidationError);
  EXPECT_THROW(ParsePhonemeLine("   "), ValidationError);
}

TEST(GeneratorTest, SameSeedIsByteIdentical) {
  auto a = TempDir("gen_a"), b = TempDir("gen_b");
  GenerateSyntheticCorpus(a, 12, 7);
  GenerateSyntheticCorpus(b, 12, 7);
  for (const auto& entry : fs::directory_iterator(a)) {
    EXPECT_EQ(ReadBytes(entry.path()), ReadBytes(b / entry.path().filename()))
        << entry.path().filename();
  }
  auto c = TempDir("gen_c");
  GenerateSyntheticCorpus(c, 12, 8);
  EXPECT_NE(ReadBytes(a / "manifest.json"), ReadBytes(c / "manifest.json"));
}

TEST(GeneratorTest, StructureFollowsTheGenerationRule) {
  SyntheticCorpus c = SynthesizeCorpus(60, 3);
  ASSERT_EQ(c.utterances.size(), 60u);
  for (const Utterance& u : c.utterances) {
    EXPECT_NO_THROW(u.Validate());
    const int words = u.text.num_words();
    EXPECT_GE(words, 2);
    EXPECT_LE(words, 8);
    const StyleFactors& f = c.factors.at(u.id);
    ASSERT_EQ(static_cast<int>(f.pitch.size()), words);
    std::vector<int> per_word(words, 0);
    for (int w : u.text.word_ids) ++per_word[w];
    for (int n : per_word) {
      EXPECT_GE(n, 1);
      EXPECT_LE(n, 5);
    }
    const auto idx = u.text.PhonemeIndices();
    int t = 0;
    for (size_t i = 0; i < idx.size(); ++i) {
      const int w = u.text.word_ids[i];
      const int expected = std::max<int>(
          1, static_cast<int>(std::lround(BaseDuration(idx[i]) * std::exp2(-f.rate[w] * 0.5))));
      EXPECT_EQ(u.durations[i], expected);
      const float period = static_cast<float>(160.0 * std::exp2(-f.pitch[w] * 0.5));
      const float corr = PhonemeInventory::IsVowel(idx[i]) ? 0.8f : 0.1f;
      for (int k = 0; k < u.durations[i]; ++k, ++t) {
        EXPECT_EQ(u.features.frames(t, kPitchPeriodChannel), period);
        EXPECT_EQ(u.features.frames(t, kPitchCorrelationChannel), corr);
      }
    }
  }
}

TEST(GeneratorTest, NeutralFactorsGiveBaseValues) {
  // period = 160 * 2^0 -> 150 Hz; base duration 8 at rate 0.
  EXPECT_EQ(160.0 * std::exp2(-0.0 * 0.5), 160.0);
  EXPECT_EQ(kSampleRate / 160.0, 150.0);
  const int vowel_with_base_8 = 2;
  EXPECT_EQ(BaseDuration(vowel_with_base_8), 8);
  EXPECT_EQ(std::lround(BaseDuration(vowel_with_base_8) * std::exp2(-0.0 * 0.5)), 8);
}

TEST(GeneratorTest, CepstraAreTemplatePlusSmallNoise) {
  SyntheticCorpus c = SynthesizeCorpus(5, 11);
  const Mat templates = PhonemeTemplates(GeneratorConfig{}.template_seed);
  double sum_sq = 0.0;
  long n = 0;
  for (const Utterance& u : c.utterances) {
    const auto idx = u.text.PhonemeIndices();
    int t = 0;
    for (size_t i = 0; i < idx.size(); ++i) {
      for (int k = 0; k < u.durations[i]; ++k, ++t) {
        const RowVec diff =
            u.features.frames.row(t).leftCols(kNumCepstral) - templates.row(idx[i]);
        sum_sq += diff.squaredNorm();
        n += kNumCepstral;
      }
    }
  }
  EXPECT_NEAR(std::sqrt(sum_sq / n), 0.05, 0.01);
}

TEST(GeneratorTest, RejectsBadArguments) {
  EXPECT_THROW(SynthesizeCorpus(0, 1), ValidationError);
  auto dir = TempDir("gen_bad");
  std::ofstream(dir / "blocker") << "x";
  EXPECT_THROW(GenerateSyntheticCorpus(dir / "blocker" / "sub", 2, 1), ValidationError);
}

TEST(LoadCorpusTest, RoundTripIsExact) {
  auto dir = TempDir("load_rt");
  SyntheticCorpus c = SynthesizeCorpus(10, 1);
  WriteCorpus(dir, c.utterances, &c.factors);
  std::vector<Utterance> loaded = LoadCorpus(dir);
  ASSERT_EQ(loaded.size(), 10u);
  for (size_t i = 0; i < loaded.size(); ++i) {
    EXPECT_EQ(loaded[i].id, c.utterances[i].id);
    EXPECT_EQ(loaded[i].text.phonemes, c.utterances[i].text.phonemes);
    EXPECT_EQ(loaded[i].durations, c.utterances[i].durations);
    EXPECT_TRUE(loaded[i].features.frames == c.utterances[i].features.frames);
  }
  auto factors = LoadStyleFactors(dir);
  EXPECT_EQ(factors.at("utt00003").pitch, c.factors.at("utt00003").pitch);
}

TEST(LoadCorpusTest, SortsById) {
  auto dir = TempDir("load_sort");
  SyntheticCorpus c = SynthesizeCorpus(4, 2);
  std::reverse(c.utterances.begin(), c.utterances.end());
  WriteCorpus(dir, c.utterances);
  auto loaded = LoadCorpus(dir);
  for (size_t i = 1; i < loaded.size(); ++i) EXPECT_LT(loaded[i - 1].id, loaded[i].id);
}

class CorruptCorpusTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = TempDir("corrupt");
    SyntheticCorpus c = SynthesizeCorpus(3, 5);
    utt_ = c.utterances[1];
    WriteCorpus(dir_, c.utterances);
  }
  std::string ExpectCorpusError() {
    try {
      LoadCorpus(dir_);
    } catch (const CorpusError& e) {
      return e.utterance_id() + ": " + e.what();
    }
    ADD_FAILURE() << "expected CorpusError";
    return {};
  }
  fs::path dir_;
  Utterance utt_;
};

TEST_F(CorruptCorpusTest, MissingFeatureFile) {
  fs::remove(dir_ / (utt_.id + ".f32"));
  std::string msg = ExpectCorpusError();
  EXPECT_NE(msg.find(utt_.id), std::string::npos);
  EXPECT_NE(msg.find("missing"), std::string::npos);
}

TEST_F(CorruptCorpusTest, FileOneRowShort) {
  WriteF32(dir_ / (utt_.id + ".f32"), utt_.features.frames.topRows(utt_.num_frames() - 1));
  std::string msg = ExpectCorpusError();
  EXPECT_NE(msg.find(utt_.id), std::string::npos);
  EXPECT_NE(msg.find("shape mismatch"), std::string::npos);
}

TEST_F(CorruptCorpusTest, DurationsSumToOneFrameShort) {
  const fs::path path = dir_ / "manifest.json";
  nlohmann::json manifest = nlohmann::json::parse(ReadBytes(path));
  for (auto& item : manifest) {
    if (item["id"] != utt_.id) continue;
    auto d = item["durations"].get<std::vector<int>>();
    auto it = std::find_if(d.begin(), d.end(), [](int x) { return x > 1; });
    ASSERT_NE(it, d.end());
    *it -= 1;
    item["durations"] = d;
  }
  std::ofstream(path, std::ios::trunc) << manifest.dump();
  std::string msg = ExpectCorpusError();
  EXPECT_NE(msg.find(utt_.id), std::string::npos);
  EXPECT_NE(msg.find("duration sum"), std::string::npos);
}

TEST(LoadCorpusTest, DurationSumMismatchInMemory) {
  Utterance u = SynthesizeCorpus(1, 9).utterances[0];
  u.durations.back() += 1;
  try {
    u.Validate();
    FAIL();
  } catch (const CorpusError& e) {
    EXPECT_EQ(e.utterance_id(), u.id);
  }
}

TEST(LoadCorpusTest, MissingManifest) {
  EXPECT_THROW(LoadCorpus(TempDir("nomanifest")), ValidationError);
}

TEST(ZNormTest, ConstantClassIsZero) {
  Utterance u;
  u.id = "a";
  u.text = ParsePhonemeLine("aa aa aa");
  u.durations = {4, 4, 4};
  u.features.frames = Mat::Zero(12, kNumChannels);
  auto z = ZNormDurations({u});
  EXPECT_EQ(z.stats.at("aa").mean, 4.0);
  EXPECT_EQ(z.stats.at("aa").std, 0.0);
  for (const auto& row : z.table) EXPECT_EQ(row.z, 0.0);
}

TEST(ZNormTest, TwoValuesGiveMinusOnePlusOne) {
  Utterance u;
  u.id = "a";
  u.text = ParsePhonemeLine("aa aa");
  u.durations = {2, 4};
  u.features.frames = Mat::Zero(6, kNumChannels);
  auto z = ZNormDurations({u});
  ASSERT_EQ(z.table.size(), 2u);
  EXPECT_DOUBLE_EQ(z.table[0].z, -1.0);
  EXPECT_DOUBLE_EQ(z.table[1].z, 1.0);
}

TEST(ZNormTest, SingleSample) {
  Utterance u;
  u.id = "a";
  u.text = ParsePhonemeLine("b");
  u.durations = {3};
  u.features.frames = Mat::Zero(3, kNumChannels);
  auto z = ZNormDurations({u});
  ASSERT_EQ(z.table.size(), 1u);
  EXPECT_EQ(z.table[0].z, 0.0);
}

TEST(ZNormTest, EmptyCorpusRejected) { EXPECT_THROW(ZNormDurations({}), ValidationError); }

TEST(ZNormTest, StandardizedPerClassOnGeneratedCorpus) {
  auto corpus = SynthesizeCorpus(80, 4).utterances;
  auto z = ZNormDurations(corpus);
  std::map<std::string, std::vector<double>> by_class;
  for (const auto& row : z.table) by_class[row.phone_class].push_back(row.z);
  for (const auto& [p, v] : by_class) {
    if (z.stats.at(p).std == 0.0) continue;
    double mean = 0.0, sq = 0.0;
    for (double x : v) mean += x;
    mean /= v.size();
    for (double x : v) sq += (x - mean) * (x - mean);
    EXPECT_NEAR(mean, 0.0, 1e-6) << p;
    EXPECT_NEAR(std::sqrt(sq / v.size()), 1.0, 1e-6) << p;
  }
}

TEST(IdListTest, SkipsBlankLines) {
  auto dir = TempDir("ids");
  std::ofstream(dir / "split.txt") << "utt1\n\n  utt2  \n";
  EXPECT_EQ(ReadIdList(dir / "split.txt"), (std::vector<std::string>{"utt1", "utt2"}));
}

}  // namespace
}  // namespace wst
