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

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "cli.h"
#include "json.hpp"
#include "test_util.h"
#include "wst/checkpoint.h"
#include "wst/control.h"
#include "wst/metrics.h"
#include "wst/prior.h"
#include "wst/synthesis.h"

namespace wst {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;
using testing::TempDir;
using tools::RunCli;

struct Result {
  int code;
  std::string out, err;
};

Result Cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = RunCli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::map<std::string, std::string> Snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = Slurp(e.path());
  }
  return files;
}

// One small corpus and a briefly trained checkpoint shared by the suite.
class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = new fs::path(TempDir("cli"));
    ASSERT_EQ(Cli({"gen-corpus", "--out", Corpus().string(), "--utterances", "12", "--seed",
                   "5", "--heldout", "3"})
                  .code,
              0);
    Result r = Cli({"train", "--corpus", Corpus().string(), "--split",
                    (Corpus() / "train_ids.txt").string(), "--out", ModelDir().string(),
                    "--steps", "4", "--warmup", "2", "--batch-size", "2", "--log-every", "0"});
    ASSERT_EQ(r.code, 0) << r.err;
    std::ofstream(Root() / "text.txt") << "aa.b ih.k.s\n\nuw.m n.ae.t.iy z.eh\n";
  }
  static void TearDownTestSuite() { delete root_; }

  static const fs::path& Root() { return *root_; }
  static fs::path Corpus() { return Root() / "corpus"; }
  static fs::path ModelDir() { return Root() / "model"; }
  static fs::path Text() { return Root() / "text.txt"; }

 private:
  static fs::path* root_;
};

fs::path* CliTest::root_ = nullptr;

TEST_F(CliTest, HelpAndUsageErrors) {
  EXPECT_EQ(Cli({"--help"}).code, 0);
  EXPECT_EQ(Cli({}).code, 2);
  EXPECT_EQ(Cli({"frobnicate"}).code, 2);
  Result r = Cli({"gen-corpus", "--utterances", "3"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("--out"), std::string::npos);
  EXPECT_EQ(Cli({"gen-corpus", "--out", (Root() / "z").string(), "--utterances", "0"}).code, 2);
}

TEST_F(CliTest, GenCorpusIsDeterministic) {
  const fs::path a = Root() / "gen_a", b = Root() / "gen_b";
  for (const fs::path& d : {a, b}) {
    ASSERT_EQ(Cli({"gen-corpus", "--out", d.string(), "--utterances", "100", "--seed", "1"})
                  .code,
              0);
  }
  EXPECT_EQ(LoadCorpus(a).size(), 100u);
  EXPECT_EQ(Snapshot(a), Snapshot(b));
}

TEST_F(CliTest, TrainIsDeterministic) {
  const fs::path again = Root() / "model_again";
  ASSERT_EQ(Cli({"train", "--corpus", Corpus().string(), "--split",
                 (Corpus() / "train_ids.txt").string(), "--out", again.string(), "--steps",
                 "4", "--warmup", "2", "--batch-size", "2", "--log-every", "0"})
                .code,
            0);
  EXPECT_EQ(Slurp(again / "params.bin"), Slurp(ModelDir() / "params.bin"));
  EXPECT_EQ(Slurp(again / "loss_log.csv"), Slurp(ModelDir() / "loss_log.csv"));
}

TEST_F(CliTest, TrainRejectsBadConfigAndOverwritingInput) {
  EXPECT_EQ(Cli({"train", "--corpus", Corpus().string(), "--out", (Root() / "bad").string(),
                 "--steps", "2", "--warmup", "5"})
                .code,
            2);
  EXPECT_EQ(Cli({"train", "--corpus", Corpus().string(), "--out", Corpus().string(),
                 "--steps", "2", "--warmup", "1"})
                .code,
            2);
}

TEST_F(CliTest, PriorSynthesisWithBiasesMatchesLibrary) {
  const fs::path out = Root() / "synth_prior";
  Result r = Cli({"synth", "--model", ModelDir().string(), "--text", Text().string(),
                  "--prior", "--bias", "3:+2:0", "--bias", "3:-2:1", "--out", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const Checkpoint ck = LoadCheckpoint(ModelDir());
  const PhonemeSequence text = ParsePhonemeLine("uw.m n.ae.t.iy z.eh");
  WordStyleEmbeddings style = PriorEmbeddings(ck.model, text);
  style = ApplyBiases(style, {{3, 2.0, 0}, {3, -2.0, 1}}, ck.model.token_bank(),
                      *ck.model.token_stats);
  const SynthesisResult expected = Synthesize(ck.model, text, style);
  const Mat written = ReadF32(out / "line001.f32", kNumChannels);
  EXPECT_TRUE(written == expected.features.frames.cast<float>().cast<double>());

  const json meta = json::parse(Slurp(out / "line001.json"));
  EXPECT_EQ(meta.at("id"), "line001");
  EXPECT_EQ(meta.at("durations_predicted").get<std::vector<int>>(), expected.durations);
  EXPECT_EQ(meta.at("n_frames").get<int>(), expected.features.num_frames());
  EXPECT_EQ(meta.at("phonemes").get<std::vector<std::string>>(), text.phonemes);
  EXPECT_EQ(meta.at("biases").size(), 2u);

  std::ifstream f0(out / "line001_f0.csv");
  std::string header;
  std::getline(f0, header);
  EXPECT_EQ(header, "frame,f0_hz,voiced");
  int rows = 0;
  for (std::string line; std::getline(f0, line);) ++rows;
  EXPECT_EQ(rows, expected.features.num_frames());
}

TEST_F(CliTest, GlobalBiasShiftsEveryWord) {
  const fs::path a = Root() / "synth_all", b = Root() / "synth_words";
  const fs::path text = Root() / "three_words.txt";
  std::ofstream(text) << "uw.m n.ae.t.iy z.eh\n";
  ASSERT_EQ(Cli({"synth", "--model", ModelDir().string(), "--text", text.string(),
                 "--prior", "--bias", "3:+2", "--out", a.string()})
                .code,
            0);
  ASSERT_EQ(Cli({"synth", "--model", ModelDir().string(), "--text", text.string(),
                 "--prior", "--bias", "3:+2:0", "--bias", "3:+2:1", "--bias", "3:+2:2",
                 "--out", b.string()})
                .code,
            0);
  EXPECT_EQ(Slurp(a / "line000.f32"), Slurp(b / "line000.f32"));
}

TEST_F(CliTest, ReferenceSynthesisUsesTheReferenceAudio) {
  const fs::path out = Root() / "synth_ref";
  Result r = Cli({"synth", "--model", ModelDir().string(), "--reference", "utt00002",
                  "--corpus", Corpus().string(), "--out", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const Checkpoint ck = LoadCheckpoint(ModelDir());
  const auto corpus = LoadCorpus(Corpus());
  const Utterance& u = corpus[2];
  const SynthesisResult expected = Synthesize(ck.model, u.text, ReferenceEmbeddings(ck.model, u));
  EXPECT_TRUE(ReadF32(out / "utt00002.f32", kNumChannels) ==
              expected.features.frames.cast<float>().cast<double>());
}

TEST_F(CliTest, SynthErrors) {
  const std::string m = ModelDir().string(), t = Text().string(), o = (Root() / "x").string();
  EXPECT_EQ(Cli({"synth", "--model", m, "--text", t, "--out", o}).code, 2);
  EXPECT_EQ(Cli({"synth", "--model", m, "--text", t, "--prior", "--reference", "utt00001",
                 "--corpus", Corpus().string(), "--out", o})
                .code,
            2);
  EXPECT_EQ(Cli({"synth", "--model", m, "--reference", "utt99999", "--corpus",
                 Corpus().string(), "--out", o})
                .code,
            2);
  EXPECT_EQ(Cli({"synth", "--model", m, "--text", t, "--prior", "--bias", "3", "--out", o})
                .code,
            2);
  EXPECT_EQ(Cli({"synth", "--model", m, "--text", t, "--prior", "--bias", "99:+1", "--out", o})
                .code,
            2);
  EXPECT_EQ(Cli({"synth", "--model", m, "--text", t, "--prior", "--bias", "3:+1:9", "--out", o})
                .code,
            2);
  EXPECT_EQ(Cli({"synth", "--model", (Root() / "missing").string(), "--text", t, "--prior",
                 "--out", o})
                .code,
            2);
}

TEST_F(CliTest, TransferEndpoints) {
  const fs::path zero = Root() / "tr0", prior = Root() / "tr_prior";
  ASSERT_EQ(Cli({"transfer", "--model", ModelDir().string(), "--corpus", Corpus().string(),
                 "--source", "utt00001", "--text", Text().string(), "--alpha", "0", "--out",
                 zero.string()})
                .code,
            0);
  ASSERT_EQ(Cli({"synth", "--model", ModelDir().string(), "--text", Text().string(),
                 "--prior", "--out", prior.string()})
                .code,
            0);
  EXPECT_EQ(Slurp(zero / "line000.f32"), Slurp(prior / "line000.f32"));
  EXPECT_EQ(Cli({"transfer", "--model", ModelDir().string(), "--corpus", Corpus().string(),
                 "--source", "utt00001", "--text", Text().string(), "--alpha", "1.5", "--out",
                 (Root() / "x").string()})
                .code,
            2);
}

TEST_F(CliTest, EvalGroundTruthIsZero) {
  const fs::path out = Root() / "gt.json";
  ASSERT_EQ(Cli({"eval", "--corpus", Corpus().string(), "--split",
                 (Corpus() / "heldout_ids.txt").string(), "--mode", "ground-truth", "--out",
                 out.string()})
                .code,
            0);
  const json j = json::parse(Slurp(out));
  for (const char* key : {"ffe", "vde", "gpe", "mcd"}) EXPECT_EQ(j.at(key).get<double>(), 0.0);
  EXPECT_EQ(j.at("per_utterance").size(), 3u);
  EXPECT_EQ(j.at("model_id"), "ground-truth");
}

TEST_F(CliTest, EvalModelReportMatchesLibrary) {
  const fs::path out = Root() / "prior.json";
  ASSERT_EQ(Cli({"eval", "--model", ModelDir().string(), "--corpus", Corpus().string(),
                 "--split", (Corpus() / "heldout_ids.txt").string(), "--mode", "prior",
                 "--out", out.string()})
                .code,
            0);
  const json j = json::parse(Slurp(out));
  for (const char* key : {"model_id", "split", "ffe", "vde", "gpe", "mcd", "per_utterance"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  const Checkpoint ck = LoadCheckpoint(ModelDir());
  const auto corpus = LoadCorpus(Corpus());
  std::vector<UtteranceMetrics> items;
  for (const std::string& id : ReadIdList(Corpus() / "heldout_ids.txt")) {
    const Utterance& u = *std::find_if(corpus.begin(), corpus.end(),
                                       [&](const Utterance& x) { return x.id == id; });
    items.push_back(EvaluatePair(
        id, u.features, Synthesize(ck.model, u.text, PriorEmbeddings(ck.model, u.text)).features));
  }
  const MetricsReport r = Aggregate(items);
  EXPECT_EQ(j.at("ffe").get<double>(), r.ffe);
  EXPECT_EQ(j.at("mcd").get<double>(), r.mcd);
}

TEST_F(CliTest, EvalErrors) {
  const fs::path empty = Root() / "empty.txt", unknown = Root() / "unknown.txt";
  std::ofstream(empty).close();
  std::ofstream(unknown) << "utt77777\n";
  const std::string o = (Root() / "e.json").string();
  EXPECT_EQ(Cli({"eval", "--model", ModelDir().string(), "--corpus", Corpus().string(),
                 "--split", empty.string(), "--mode", "prior", "--out", o})
                .code,
            2);
  EXPECT_EQ(Cli({"eval", "--model", ModelDir().string(), "--corpus", Corpus().string(),
                 "--split", unknown.string(), "--mode", "prior", "--out", o})
                .code,
            2);
  EXPECT_EQ(Cli({"eval", "--model", ModelDir().string(), "--corpus", Corpus().string(),
                 "--split", unknown.string(), "--mode", "sideways", "--out", o})
                .code,
            2);
}

TEST_F(CliTest, StatsWritesTokenJson) {
  const fs::path out = Root() / "stats.json";
  ASSERT_EQ(Cli({"stats", "--model", ModelDir().string(), "--out", out.string()}).code, 0);
  const TokenWeightStats s = TokenStatsFromJson(Slurp(out));
  const Checkpoint ck = LoadCheckpoint(ModelDir());
  EXPECT_EQ(s.mean, ck.model.token_stats->mean);
  EXPECT_EQ(s.std, ck.model.token_stats->std);
  const json j = json::parse(Slurp(out));
  EXPECT_EQ(j.size(), 15u);
  EXPECT_TRUE(j.at("token_14").contains("std"));
}

TEST_F(CliTest, AuditPasses) {
  Result r = Cli({"audit", "--corpus", Corpus().string(), "--batch-size", "2"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("ok"), std::string::npos);
}

TEST_F(CliTest, PlotF0HasOneColumnPerVariant) {
  const fs::path a = Root() / "plot_a", b = Root() / "plot_b";
  ASSERT_EQ(Cli({"synth", "--model", ModelDir().string(), "--text", Text().string(),
                 "--prior", "--out", a.string()})
                .code,
            0);
  ASSERT_EQ(Cli({"synth", "--model", ModelDir().string(), "--text", Text().string(),
                 "--prior", "--bias", "0:+2", "--out", b.string()})
                .code,
            0);
  const fs::path svg = Root() / "plots" / "f0.svg";
  ASSERT_EQ(Cli({"plot", "--in", a.string(), "--in", b.string(), "--label", "plain",
                 "--label", "biased", "--kind", "f0", "--id", "line000", "--out", svg.string()})
                .code,
            0);
  EXPECT_NE(Slurp(svg).find("<svg"), std::string::npos);
  std::ifstream csv(Root() / "plots" / "f0.csv");
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header, "frame,plain,biased");
  for (const auto& e : fs::directory_iterator(Root() / "plots")) {
    EXPECT_NE(e.path().extension(), ".tmp") << e.path();
  }
}

TEST_F(CliTest, PlotKdeCurvesIntegrateToOne) {
  for (const std::string kind : {"durations-kde", "pitch-kde", "pitch-std-kde"}) {
    const fs::path svg = Root() / "plots" / (kind + ".svg");
    Result r = Cli({"plot", "--in", Corpus().string(), "--kind", kind, "--out", svg.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    std::ifstream csv(fs::path(svg).replace_extension(".csv"));
    std::string line;
    std::getline(csv, line);
    EXPECT_EQ(line, "variant,grid_value,density");
    KdeCurve c;
    while (std::getline(csv, line)) {
      std::stringstream ss(line);
      std::string variant, x, y;
      std::getline(ss, variant, ',');
      std::getline(ss, x, ',');
      std::getline(ss, y, ',');
      c.grid.push_back(std::stod(x));
      c.density.push_back(std::stod(y));
    }
    EXPECT_NEAR(TrapezoidIntegral(c), 1.0, 1e-3) << kind;
  }
  EXPECT_EQ(Cli({"plot", "--in", Corpus().string(), "--kind", "spectrogram", "--out",
                 (Root() / "plots" / "x.svg").string()})
                .code,
            2);
}

TEST_F(CliTest, CommandsLeaveInputsUntouched) {
  const auto corpus_before = Snapshot(Corpus());
  const auto model_before = Snapshot(ModelDir());
  Cli({"synth", "--model", ModelDir().string(), "--reference", "utt00001", "--corpus",
       Corpus().string(), "--out", (Root() / "untouched").string()});
  Cli({"eval", "--model", ModelDir().string(), "--corpus", Corpus().string(), "--split",
       (Corpus() / "heldout_ids.txt").string(), "--mode", "reference", "--out",
       (Root() / "untouched.json").string()});
  Cli({"stats", "--model", ModelDir().string(), "--corpus", Corpus().string(), "--out",
       (Root() / "untouched_stats.json").string()});
  Cli({"plot", "--in", Corpus().string(), "--kind", "pitch-kde", "--out",
       (Root() / "untouched.svg").string()});
  EXPECT_EQ(Snapshot(Corpus()), corpus_before);
  EXPECT_EQ(Snapshot(ModelDir()), model_before);
}

}  // namespace
}  // namespace wst
