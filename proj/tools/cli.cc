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

#include "cli.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "svg.h"
#include "wst/checkpoint.h"
#include "wst/control.h"
#include "wst/corpus.h"
#include "wst/encoders.h"
#include "wst/errors.h"
#include "wst/metrics.h"
#include "wst/prior.h"
#include "wst/synthesis.h"
#include "wst/training.h"

namespace wst::tools {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

// ---- shared helpers ---------------------------------------------------------

std::string ReadText(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json ReadJson(const fs::path& path) {
  try {
    return json::parse(ReadText(path));
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

std::vector<PhonemeSequence> ReadTextFile(const fs::path& path) {
  std::vector<PhonemeSequence> out;
  std::istringstream in(ReadText(path));
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(ParsePhonemeLine(line));
    } catch (const ValidationError& e) {
      throw ValidationError(path.string() + ":" + std::to_string(number) + ": " + e.what());
    }
  }
  if (out.empty()) throw ValidationError(path.string() + " contains no sentences");
  return out;
}

// Refuses to write into a directory the command reads from.
void EnsureDistinct(const fs::path& out, const std::vector<fs::path>& inputs) {
  for (const fs::path& in : inputs) {
    std::error_code ec;
    if (!in.empty() && fs::exists(out) && fs::exists(in) && fs::equivalent(out, in, ec)) {
      throw ValidationError("output " + out.string() + " would overwrite input " +
                            in.string());
    }
  }
}

void MakeDirs(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::is_directory(dir)) throw ValidationError("cannot create directory " + dir.string());
}

const Utterance& FindUtterance(const std::vector<Utterance>& corpus, const std::string& id) {
  auto it = std::lower_bound(corpus.begin(), corpus.end(), id,
                             [](const Utterance& u, const std::string& v) { return u.id < v; });
  if (it == corpus.end() || it->id != id) {
    throw ValidationError("utterance '" + id + "' is not in the corpus");
  }
  return *it;
}

std::vector<Utterance> SelectUtterances(const std::vector<Utterance>& corpus,
                                        const std::vector<std::string>& ids) {
  std::vector<Utterance> out;
  out.reserve(ids.size());
  for (const std::string& id : ids) out.push_back(FindUtterance(corpus, id));
  return out;
}

std::string LineName(size_t index) {
  std::ostringstream s;
  s << "line" << std::setw(3) << std::setfill('0') << index;
  return s.str();
}

std::vector<BiasSpec> ParseBiases(const std::vector<std::string>& specs, int num_tokens) {
  std::vector<BiasSpec> out;
  for (const std::string& s : specs) out.push_back(ParseBiasSpec(s, num_tokens));
  return out;
}

TokenWeightStats ResolveStats(const Model& m, const std::string& stats_file) {
  if (!stats_file.empty()) {
    TokenWeightStats s = TokenStatsFromJson(ReadText(stats_file));
    if (s.num_tokens() != m.config().num_tokens) {
      throw ValidationError("token stats file has the wrong number of tokens");
    }
    return s;
  }
  if (!m.token_stats) {
    throw ValidationError("checkpoint carries no token stats; pass --stats FILE");
  }
  return *m.token_stats;
}

json BiasesJson(const std::vector<BiasSpec>& biases) {
  json arr = json::array();
  for (const BiasSpec& b : biases) {
    json j = {{"token", b.token_id}, {"amount_stds", b.amount_stds}};
    j["word"] = b.word_index ? json(*b.word_index) : json("all");
    arr.push_back(j);
  }
  return arr;
}

// Writes features, the JSON sidecar and the F0 contour for one output.
void WriteSynthOutput(const fs::path& dir, const std::string& name,
                      const PhonemeSequence& text, const SynthesisResult& r, json meta) {
  WriteF32(dir / (name + ".f32"), r.features.frames);
  meta["id"] = name;
  meta["text"] = FormatPhonemeLine(text);
  meta["phonemes"] = text.phonemes;
  meta["word_ids"] = text.word_ids;
  meta["durations_predicted"] = r.durations;
  meta["n_frames"] = r.features.num_frames();
  meta["feature_file"] = name + ".f32";
  WriteFileAtomic(dir / (name + ".json"), meta.dump(2) + "\n");
  // Contour of the stored float32 features, so it matches what readers see.
  const PitchTrack track =
      ExtractPitch(AcousticFeatures{r.features.frames.cast<float>().cast<double>()});
  std::ostringstream csv;
  csv << "frame,f0_hz,voiced\n" << std::setprecision(10);
  for (int t = 0; t < track.size(); ++t) {
    csv << t << "," << track.f0[t] << "," << (track.voiced[t] ? 1 : 0) << "\n";
  }
  WriteFileAtomic(dir / (name + "_f0.csv"), csv.str());
}

void WriteSynthIndex(const fs::path& dir, const std::string& mode,
                     const std::vector<std::string>& names) {
  json j = {{"mode", mode}, {"items", names}};
  WriteFileAtomic(dir / "index.json", j.dump(2) + "\n");
}

// ---- gen-corpus -------------------------------------------------------------

struct GenArgs {
  std::string out;
  int utterances = 0;
  std::uint64_t seed = 1;
  int heldout = 0;
};

int RunGen(const GenArgs& a, std::ostream& out) {
  if (a.heldout < 0 || (a.heldout > 0 && a.heldout >= a.utterances)) {
    throw ValidationError("--heldout must be in [0, utterances)");
  }
  SyntheticCorpus c = SynthesizeCorpus(a.utterances, a.seed);
  WriteCorpus(a.out, c.utterances, &c.factors);
  if (a.heldout > 0) {
    std::string train, held;
    const size_t cut = c.utterances.size() - static_cast<size_t>(a.heldout);
    for (size_t i = 0; i < c.utterances.size(); ++i) {
      (i < cut ? train : held) += c.utterances[i].id + "\n";
    }
    WriteFileAtomic(fs::path(a.out) / "train_ids.txt", train);
    WriteFileAtomic(fs::path(a.out) / "heldout_ids.txt", held);
  }
  out << "wrote " << a.utterances << " utterances to " << a.out << "\n";
  return kExitOk;
}

// ---- train ------------------------------------------------------------------

struct TrainArgs {
  std::string corpus, out, split, exclude;
  bool full_scale = false;
  bool fixed_sigma = false;
  std::optional<int> steps, batch, warmup, decay, snapshot_every, num_tokens;
  std::optional<double> lr, l2, clip, lambda_dur, lambda_prior, prenet_dropout,
      pitch_feedback_dropout;
  std::optional<std::uint64_t> seed, model_seed;
  int log_every = 100;
};

std::vector<Utterance> TrainingSet(const TrainArgs& a) {
  std::vector<Utterance> corpus = LoadCorpus(a.corpus);
  if (!a.split.empty()) corpus = SelectUtterances(corpus, ReadIdList(a.split));
  if (!a.exclude.empty()) {
    std::vector<std::string> ids = ReadIdList(a.exclude);
    std::set<std::string> drop(ids.begin(), ids.end());
    std::erase_if(corpus, [&](const Utterance& u) { return drop.count(u.id) > 0; });
  }
  if (corpus.empty()) throw ValidationError("training set is empty");
  return corpus;
}

int RunTrain(const TrainArgs& a, std::ostream& out) {
  EnsureDistinct(a.out, {a.corpus});
  TrainingConfig c = a.full_scale ? TrainingConfig::FullScale() : TrainingConfig{};
  if (a.steps) c.max_steps = *a.steps;
  if (a.batch) c.batch_size = *a.batch;
  if (a.warmup) c.warmup_steps = *a.warmup;
  if (a.decay) c.decay_period = *a.decay;
  if (a.snapshot_every) c.snapshot_every = *a.snapshot_every;
  if (a.lr) c.base_lr = *a.lr;
  if (a.l2) c.l2_factor = *a.l2;
  if (a.clip) c.clip_norm = *a.clip;
  if (a.lambda_dur) c.lambda_duration = *a.lambda_dur;
  if (a.lambda_prior) c.lambda_prior = *a.lambda_prior;
  if (a.prenet_dropout) c.prenet_dropout = *a.prenet_dropout;
  if (a.pitch_feedback_dropout) c.pitch_feedback_dropout = *a.pitch_feedback_dropout;
  if (a.seed) c.seed = *a.seed;
  c.Validate();
  ModelConfig mc;
  if (a.num_tokens) mc.num_tokens = *a.num_tokens;
  if (a.model_seed) mc.seed = *a.model_seed;
  mc.fixed_sigma = a.fixed_sigma;
  mc.Validate();

  const std::vector<Utterance> corpus = TrainingSet(a);
  {
    Model init(mc);
    FitFeatureNormalization(init, corpus);
    std::vector<const Utterance*> batch;
    for (size_t i = 0; i < corpus.size() && static_cast<int>(i) < c.batch_size; ++i) {
      batch.push_back(&corpus[i]);
    }
    GradientAudit audit = AuditGradientIsolation(init, batch);
    if (!audit.ok()) {
      std::string names;
      for (const auto& n : audit.prior_leaks) names += " " + n;
      for (const auto& n : audit.word_sequence_leaks) names += " " + n;
      throw TrainingError("gradient isolation audit failed:" + names);
    }
    out << "gradient audit: ok\n";
  }
  MakeDirs(a.out);
  const fs::path out_dir = a.out;
  auto progress = [&](const LossLogRow& r) {
    if (a.log_every > 0 && (r.step % a.log_every == 0 || r.step == 1)) {
      out << "step " << r.step << " lr " << r.lr << " recon " << r.loss.recon << " dur "
          << r.loss.duration << " prior " << r.loss.prior << " total " << r.loss.total
          << std::endl;
    }
  };
  auto snapshot = [&](const Model& m, int step) {
    std::ostringstream name;
    name << "step_" << std::setw(7) << std::setfill('0') << step;
    SaveCheckpoint(out_dir / "snapshots" / name.str(), m, c, step);
  };
  TrainResult r = Train(corpus, mc, c, progress, snapshot);
  SaveCheckpoint(out_dir, r.model, c, r.steps, r.log);
  out << "saved checkpoint to " << a.out << " after " << r.steps << " steps\n";
  return kExitOk;
}

// ---- synth / transfer -------------------------------------------------------

struct SynthArgs {
  std::string model, text, reference, corpus, stats, out;
  bool prior = false;
  std::vector<std::string> biases;
};

int RunSynth(const SynthArgs& a, std::ostream& out) {
  const bool reference = !a.reference.empty();
  if (reference == a.prior) throw ValidationError("give exactly one of --reference or --prior");
  if (reference && a.corpus.empty()) throw ValidationError("--reference needs --corpus");
  if (a.prior && !a.corpus.empty()) throw ValidationError("--corpus is only used with --reference");
  if (a.prior && a.text.empty()) throw ValidationError("--prior needs --text");
  EnsureDistinct(a.out, {a.model, a.corpus});

  const Checkpoint ck = LoadCheckpoint(a.model);
  const Model& m = ck.model;
  const std::vector<BiasSpec> biases = ParseBiases(a.biases, m.config().num_tokens);
  TokenWeightStats stats;
  if (!biases.empty()) stats = ResolveStats(m, a.stats);
  const StyleTokenBank bank = m.token_bank();

  std::vector<Utterance> corpus;
  std::optional<WordStyleEmbeddings> ref_style;
  const Utterance* ref_utt = nullptr;
  if (reference) {
    corpus = LoadCorpus(a.corpus);
    ref_utt = &FindUtterance(corpus, a.reference);
    ref_style = ReferenceEmbeddings(m, *ref_utt);
  }
  std::vector<std::pair<std::string, PhonemeSequence>> items;
  if (!a.text.empty()) {
    const auto texts = ReadTextFile(a.text);
    for (size_t i = 0; i < texts.size(); ++i) items.emplace_back(LineName(i), texts[i]);
  } else {
    items.emplace_back(ref_utt->id, ref_utt->text);
  }

  MakeDirs(a.out);
  std::vector<std::string> names;
  for (const auto& [name, text] : items) {
    WordStyleEmbeddings style;
    if (reference) {
      style = a.text.empty() ? *ref_style : MixStyles(*ref_style, PriorEmbeddings(m, text), 1.0);
    } else {
      style = PriorEmbeddings(m, text);
    }
    if (!biases.empty()) style = ApplyBiases(style, biases, bank, stats);
    const SynthesisResult r = Synthesize(m, text, style);
    json meta = {{"mode", reference ? "reference" : "prior"}, {"biases", BiasesJson(biases)}};
    if (reference) meta["reference"] = a.reference;
    WriteSynthOutput(a.out, name, text, r, meta);
    names.push_back(name);
  }
  WriteSynthIndex(a.out, reference ? "reference" : "prior", names);
  out << "synthesized " << names.size() << " utterance(s) into " << a.out << "\n";
  return kExitOk;
}

struct TransferArgs {
  std::string model, corpus, source, text, stats, out;
  double alpha = 0.5;
  std::vector<std::string> biases;
};

int RunTransfer(const TransferArgs& a, std::ostream& out) {
  EnsureDistinct(a.out, {a.model, a.corpus});
  const Checkpoint ck = LoadCheckpoint(a.model);
  const Model& m = ck.model;
  const std::vector<BiasSpec> biases = ParseBiases(a.biases, m.config().num_tokens);
  TokenWeightStats stats;
  if (!biases.empty()) stats = ResolveStats(m, a.stats);
  const std::vector<Utterance> corpus = LoadCorpus(a.corpus);
  const Utterance& source = FindUtterance(corpus, a.source);
  const auto texts = ReadTextFile(a.text);
  MakeDirs(a.out);
  std::vector<std::string> names;
  for (size_t i = 0; i < texts.size(); ++i) {
    WordStyleEmbeddings style = StyleTransfer(m, source, texts[i], a.alpha);
    if (!biases.empty()) style = ApplyBiases(style, biases, m.token_bank(), stats);
    const SynthesisResult r = Synthesize(m, texts[i], style);
    json meta = {{"mode", "transfer"},
                 {"source", a.source},
                 {"alpha", a.alpha},
                 {"biases", BiasesJson(biases)}};
    WriteSynthOutput(a.out, LineName(i), texts[i], r, meta);
    names.push_back(LineName(i));
  }
  WriteSynthIndex(a.out, "transfer", names);
  out << "transferred style of " << a.source << " onto " << names.size()
      << " sentence(s) in " << a.out << "\n";
  return kExitOk;
}

// ---- eval -------------------------------------------------------------------

struct EvalArgs {
  std::string model, corpus, split, mode, out;
};

int RunEval(const EvalArgs& a, std::ostream& out) {
  const bool ground_truth = a.mode == "ground-truth";
  if (!ground_truth && a.model.empty()) throw ValidationError("--model is required");
  const std::vector<std::string> ids = ReadIdList(a.split);
  if (ids.empty()) throw ValidationError("split file " + a.split + " lists no utterances");
  const std::vector<Utterance> corpus = LoadCorpus(a.corpus);
  const std::vector<Utterance> items = SelectUtterances(corpus, ids);
  std::optional<Checkpoint> ck;
  if (!ground_truth) ck = LoadCheckpoint(a.model);

  std::vector<UtteranceMetrics> results;
  for (const Utterance& u : items) {
    AcousticFeatures est;
    if (ground_truth) {
      est = u.features;
    } else {
      const Model& m = ck->model;
      const WordStyleEmbeddings style =
          a.mode == "reference" ? ReferenceEmbeddings(m, u) : PriorEmbeddings(m, u.text);
      est = Synthesize(m, u.text, style).features;
    }
    results.push_back(EvaluatePair(u.id, u.features, est));
  }
  const MetricsReport r = Aggregate(std::move(results));

  json per = json::array();
  for (const UtteranceMetrics& u : r.per_utterance) {
    per.push_back({{"id", u.id},
                   {"ffe", u.pitch.ffe},
                   {"vde", u.pitch.vde},
                   {"gpe", u.pitch.gpe},
                   {"mcd", u.mcd},
                   {"frames_compared", u.pitch.frames},
                   {"ref_frames", u.ref_frames},
                   {"est_frames", u.est_frames}});
  }
  json report = {{"model_id", ground_truth ? std::string("ground-truth")
                                           : fs::path(a.model).lexically_normal().string()},
                 {"split", a.split},
                 {"mode", a.mode},
                 {"ffe", r.ffe},
                 {"vde", r.vde},
                 {"gpe", r.gpe},
                 {"mcd", r.mcd},
                 {"frames_compared", r.frames_compared},
                 {"per_utterance", per}};
  WriteFileAtomic(a.out, report.dump(2) + "\n");
  out << a.mode << ": ffe " << r.ffe << " vde " << r.vde << " gpe " << r.gpe << " mcd "
      << r.mcd << " over " << r.per_utterance.size() << " utterances\n";
  return kExitOk;
}

// ---- stats / audit ----------------------------------------------------------

struct StatsArgs {
  std::string model, corpus, split, out;
};

int RunStats(const StatsArgs& a, std::ostream& out) {
  const Checkpoint ck = LoadCheckpoint(a.model);
  TokenWeightStats stats;
  if (a.corpus.empty()) {
    if (!ck.model.token_stats) throw ValidationError("checkpoint carries no token stats");
    stats = *ck.model.token_stats;
  } else {
    std::vector<Utterance> corpus = LoadCorpus(a.corpus);
    if (!a.split.empty()) corpus = SelectUtterances(corpus, ReadIdList(a.split));
    stats = ComputeTokenStats(ck.model, corpus);
  }
  WriteFileAtomic(a.out, TokenStatsToJson(stats));
  for (int k = 0; k < stats.num_tokens(); ++k) {
    out << "token_" << k << " mean " << stats.mean[k] << " std " << stats.std[k] << "\n";
  }
  return kExitOk;
}

struct AuditArgs {
  std::string model, corpus;
  int batch = 8;
};

int RunAudit(const AuditArgs& a, std::ostream& out) {
  const std::vector<Utterance> corpus = LoadCorpus(a.corpus);
  Model m;
  if (!a.model.empty()) {
    m = LoadCheckpoint(a.model).model;
  } else {
    FitFeatureNormalization(m, corpus);
  }
  std::vector<const Utterance*> batch;
  for (size_t i = 0; i < corpus.size() && static_cast<int>(i) < a.batch; ++i) {
    batch.push_back(&corpus[i]);
  }
  const GradientAudit audit = AuditGradientIsolation(m, batch);
  for (const auto& n : audit.prior_leaks) out << "prior loss reaches " << n << "\n";
  for (const auto& n : audit.word_sequence_leaks) out << "word sequence path reaches " << n << "\n";
  out << "gradient audit: " << (audit.ok() ? "ok" : "FAILED") << "\n";
  return audit.ok() ? kExitOk : kExitFailure;
}

// ---- plot -------------------------------------------------------------------

struct VariantItem {
  std::string id;
  PhonemeSequence text;
  std::vector<int> durations;
  AcousticFeatures features;
};

// A corpus directory (manifest.json) or a synth/transfer output (index.json).
std::vector<VariantItem> LoadVariant(const fs::path& dir) {
  std::vector<VariantItem> out;
  if (fs::exists(dir / "manifest.json")) {
    for (Utterance& u : LoadCorpus(dir)) {
      out.push_back({u.id, std::move(u.text), std::move(u.durations), std::move(u.features)});
    }
    return out;
  }
  if (!fs::exists(dir / "index.json")) {
    throw ValidationError(dir.string() + " holds neither a corpus nor synthesis output");
  }
  const json index = ReadJson(dir / "index.json");
  try {
    for (const json& id : index.at("items")) {
      const std::string name = id.get<std::string>();
      const json meta = ReadJson(dir / (name + ".json"));
      VariantItem v;
      v.id = name;
      v.text.phonemes = meta.at("phonemes").get<std::vector<std::string>>();
      v.text.word_ids = meta.at("word_ids").get<std::vector<int>>();
      v.durations = meta.at("durations_predicted").get<std::vector<int>>();
      v.features.frames = ReadF32(dir / meta.at("feature_file").get<std::string>(), kNumChannels);
      out.push_back(std::move(v));
    }
  } catch (const json::exception& e) {
    throw ValidationError(dir.string() + ": malformed synthesis output: " + e.what());
  }
  if (out.empty()) throw ValidationError(dir.string() + " has no items");
  return out;
}

std::vector<Utterance> AsUtterances(const std::vector<VariantItem>& items) {
  std::vector<Utterance> out;
  for (const VariantItem& v : items) {
    Utterance u;
    u.id = v.id;
    u.text = v.text;
    u.durations = v.durations;
    out.push_back(std::move(u));
  }
  return out;
}

struct PlotArgs {
  std::vector<std::string> inputs, labels;
  std::string kind, out, id, norm_corpus;
  std::optional<double> bandwidth;
};

fs::path CsvPathFor(const fs::path& svg) {
  fs::path p = svg;
  return p.replace_extension(".csv");
}

int RunPlot(const PlotArgs& a, std::ostream& out) {
  static const std::set<std::string> kKinds = {"f0", "durations-kde", "pitch-kde",
                                               "pitch-std-kde"};
  if (!kKinds.count(a.kind)) throw ValidationError("unknown plot kind '" + a.kind + "'");
  if (!a.labels.empty() && a.labels.size() != a.inputs.size()) {
    throw ValidationError("give one --label per --in");
  }
  std::vector<std::string> labels = a.labels;
  if (labels.empty()) {
    for (const std::string& in : a.inputs) {
      labels.push_back(fs::path(in).lexically_normal().filename().string());
    }
  }
  std::vector<std::vector<VariantItem>> variants;
  for (const std::string& in : a.inputs) variants.push_back(LoadVariant(in));

  std::vector<Series> series;
  std::ostringstream csv;
  csv << std::setprecision(10);
  std::string title, x_label, y_label;

  if (a.kind == "f0") {
    const std::string id = a.id.empty() ? variants[0].front().id : a.id;
    std::vector<PitchTrack> tracks;
    for (size_t v = 0; v < variants.size(); ++v) {
      auto it = std::find_if(variants[v].begin(), variants[v].end(),
                             [&](const VariantItem& x) { return x.id == id; });
      if (it == variants[v].end()) {
        throw ValidationError("item '" + id + "' missing from " + a.inputs[v]);
      }
      tracks.push_back(ExtractPitch(it->features));
    }
    size_t n = 0;
    for (const PitchTrack& t : tracks) n = std::max(n, static_cast<size_t>(t.size()));
    csv << "frame";
    for (const std::string& l : labels) csv << "," << l;
    csv << "\n";
    for (size_t t = 0; t < n; ++t) {
      csv << t;
      for (const PitchTrack& tr : tracks) {
        csv << ",";
        if (t < static_cast<size_t>(tr.size())) csv << tr.f0[t];
      }
      csv << "\n";
    }
    for (size_t v = 0; v < tracks.size(); ++v) {
      Series s{labels[v], {}, {}};
      for (int t = 0; t < tracks[v].size(); ++t) {
        s.x.push_back(t);
        s.y.push_back(tracks[v].voiced[t] ? tracks[v].f0[t]
                                          : std::numeric_limits<double>::quiet_NaN());
      }
      series.push_back(std::move(s));
    }
    title = "F0 contour: " + id;
    x_label = "frame";
    y_label = "F0 (Hz)";
  } else {
    std::optional<DurationNormalization> shared_norm;
    if (a.kind == "durations-kde" && !a.norm_corpus.empty()) {
      shared_norm = ZNormDurations(LoadCorpus(a.norm_corpus));
    }
    double bw = kDurationBandwidth;
    if (a.kind == "pitch-kde") bw = kPitchBandwidth;
    if (a.kind == "pitch-std-kde") bw = kPitchStdBandwidth;
    if (a.bandwidth) bw = *a.bandwidth;
    csv << "variant,grid_value,density\n";
    for (size_t v = 0; v < variants.size(); ++v) {
      std::vector<double> samples;
      if (a.kind == "durations-kde") {
        if (shared_norm) {
          for (const VariantItem& item : variants[v]) {
            for (size_t i = 0; i < item.durations.size(); ++i) {
              samples.push_back(shared_norm->Normalize(item.text.phonemes[i], item.durations[i]));
            }
          }
        } else {
          for (const NormalizedDuration& d : ZNormDurations(AsUtterances(variants[v])).table) {
            samples.push_back(d.z);
          }
        }
      } else {
        for (const VariantItem& item : variants[v]) {
          const PitchTrack t = ExtractPitch(item.features);
          if (a.kind == "pitch-std-kde") {
            samples.push_back(PitchDeviation(t));
            continue;
          }
          for (int f = 0; f < t.size(); ++f) {
            if (t.voiced[f]) samples.push_back(t.f0[f]);
          }
        }
      }
      if (samples.empty()) throw ValidationError(a.inputs[v] + " yields no samples");
      const KdeCurve curve = KdeAuto(samples, bw);
      for (size_t k = 0; k < curve.grid.size(); ++k) {
        csv << labels[v] << "," << curve.grid[k] << "," << curve.density[k] << "\n";
      }
      series.push_back({labels[v], curve.grid, curve.density});
      out << labels[v] << ": " << samples.size() << " samples, integral "
          << TrapezoidIntegral(curve) << "\n";
    }
    if (a.kind == "durations-kde") {
      title = "Phoneme duration (z-normalized per phone class)";
      x_label = "z";
    } else if (a.kind == "pitch-kde") {
      title = "Pitch values";
      x_label = "F0 (Hz)";
    } else {
      title = "Per-utterance pitch deviation";
      x_label = "std of F0 (Hz)";
    }
    y_label = "density";
  }
  const fs::path svg = a.out;
  if (svg.has_parent_path()) MakeDirs(svg.parent_path());
  WriteFileAtomic(svg, RenderLinePlot(series, title, x_label, y_label));
  WriteFileAtomic(CsvPathFor(svg), csv.str());
  out << "wrote " << svg.string() << " and " << CsvPathFor(svg).string() << "\n";
  return kExitOk;
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Word-level style-token speech synthesis toolkit", "wst"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-corpus", "Generate a synthetic corpus");
  gen_cmd->add_option("--out", gen.out, "Output corpus directory")->required();
  gen_cmd->add_option("--utterances", gen.utterances, "Number of utterances")->required();
  gen_cmd->add_option("--seed", gen.seed, "Generator seed");
  gen_cmd->add_option("--heldout", gen.heldout,
                      "Also write train_ids.txt / heldout_ids.txt with this many held out");

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train a model on a corpus");
  train_cmd->add_option("--corpus", train.corpus, "Corpus directory")->required();
  train_cmd->add_option("--out", train.out, "Checkpoint directory")->required();
  train_cmd->add_option("--split", train.split, "File of utterance ids to train on");
  train_cmd->add_option("--exclude", train.exclude, "File of utterance ids to leave out");
  train_cmd->add_flag("--full-scale", train.full_scale, "Start from the full-scale schedule");
  train_cmd->add_option("--steps", train.steps, "Training steps");
  train_cmd->add_option("--batch-size", train.batch, "Batch size");
  train_cmd->add_option("--warmup", train.warmup, "Warmup steps");
  train_cmd->add_option("--decay", train.decay, "Steps per learning-rate halving");
  train_cmd->add_option("--lr", train.lr, "Base learning rate");
  train_cmd->add_option("--l2", train.l2, "L2 factor");
  train_cmd->add_option("--clip", train.clip, "Global gradient-norm clip (<= 0 disables)");
  train_cmd->add_option("--lambda-dur", train.lambda_dur, "Duration loss weight");
  train_cmd->add_option("--lambda-prior", train.lambda_prior, "Prior loss weight");
  train_cmd->add_option("--prenet-dropout", train.prenet_dropout, "Decoder prenet dropout rate");
  train_cmd->add_option("--pitch-feedback-dropout", train.pitch_feedback_dropout,
                        "Per-utterance rate of hiding fed-back pitch in training");
  train_cmd->add_option("--seed", train.seed, "Data order seed");
  train_cmd->add_option("--model-seed", train.model_seed, "Initialization seed");
  train_cmd->add_option("--num-tokens", train.num_tokens, "Number of style tokens");
  train_cmd->add_flag("--fixed-sigma", train.fixed_sigma, "Use a fixed upsampling sigma");
  train_cmd->add_option("--snapshot-every", train.snapshot_every, "Snapshot period in steps");
  train_cmd->add_option("--log-every", train.log_every, "Progress print period");

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Synthesize features from text");
  synth_cmd->add_option("--model", synth.model, "Checkpoint directory")->required();
  synth_cmd->add_option("--text", synth.text, "Text file, one sentence per line");
  auto* ref_opt = synth_cmd->add_option("--reference", synth.reference, "Reference utterance id");
  auto* prior_opt = synth_cmd->add_flag("--prior", synth.prior, "Use prior embeddings");
  ref_opt->excludes(prior_opt);
  synth_cmd->add_option("--corpus", synth.corpus, "Corpus holding the reference");
  synth_cmd->add_option("--bias", synth.biases, "Bias TOKEN:STDS[:WORD], repeatable");
  synth_cmd->add_option("--stats", synth.stats, "Token stats JSON overriding the checkpoint's");
  synth_cmd->add_option("--out", synth.out, "Output directory")->required();

  TransferArgs transfer;
  auto* transfer_cmd = app.add_subcommand("transfer", "Transfer a recording's style to text");
  transfer_cmd->add_option("--model", transfer.model, "Checkpoint directory")->required();
  transfer_cmd->add_option("--corpus", transfer.corpus, "Corpus directory")->required();
  transfer_cmd->add_option("--source", transfer.source, "Source utterance id")->required();
  transfer_cmd->add_option("--text", transfer.text, "Target text file")->required();
  transfer_cmd->add_option("--alpha", transfer.alpha, "Source weight in [0, 1]");
  transfer_cmd->add_option("--bias", transfer.biases, "Bias TOKEN:STDS[:WORD], repeatable");
  transfer_cmd->add_option("--stats", transfer.stats, "Token stats JSON");
  transfer_cmd->add_option("--out", transfer.out, "Output directory")->required();

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Objective evaluation on a split");
  eval_cmd->add_option("--model", eval.model, "Checkpoint directory");
  eval_cmd->add_option("--corpus", eval.corpus, "Corpus directory")->required();
  eval_cmd->add_option("--split", eval.split, "File of held-out ids")->required();
  eval_cmd->add_option("--mode", eval.mode, "Embedding source")
      ->required()
      ->check(CLI::IsMember({"reference", "prior", "ground-truth"}));
  eval_cmd->add_option("--out", eval.out, "metrics.json path")->required();

  StatsArgs stats;
  auto* stats_cmd = app.add_subcommand("stats", "Token weight statistics");
  stats_cmd->add_option("--model", stats.model, "Checkpoint directory")->required();
  stats_cmd->add_option("--corpus", stats.corpus, "Recompute over this corpus");
  stats_cmd->add_option("--split", stats.split, "Restrict to these ids");
  stats_cmd->add_option("--out", stats.out, "Output JSON")->required();

  AuditArgs audit;
  auto* audit_cmd = app.add_subcommand("audit", "Gradient isolation audit");
  audit_cmd->add_option("--corpus", audit.corpus, "Corpus directory")->required();
  audit_cmd->add_option("--model", audit.model, "Checkpoint (default: fresh model)");
  audit_cmd->add_option("--batch-size", audit.batch, "Utterances in the audit batch");

  PlotArgs plot;
  auto* plot_cmd = app.add_subcommand("plot", "Emit an SVG plot and its CSV");
  plot_cmd->add_option("--in", plot.inputs, "Corpus or synthesis directory, repeatable")
      ->required();
  plot_cmd->add_option("--label", plot.labels, "Legend label per --in");
  plot_cmd->add_option("--kind", plot.kind, "f0, durations-kde, pitch-kde or pitch-std-kde")
      ->required();
  plot_cmd->add_option("--out", plot.out, "SVG path; the CSV goes next to it")->required();
  plot_cmd->add_option("--id", plot.id, "Item for --kind f0");
  plot_cmd->add_option("--norm-corpus", plot.norm_corpus,
                       "Corpus whose per-class duration stats normalize every input");
  plot_cmd->add_option("--bandwidth", plot.bandwidth, "KDE bandwidth override");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    err << "run with --help for usage\n";
    return kExitUsage;
  }

  try {
    if (*gen_cmd) return RunGen(gen, out);
    if (*train_cmd) return RunTrain(train, out);
    if (*synth_cmd) return RunSynth(synth, out);
    if (*transfer_cmd) return RunTransfer(transfer, out);
    if (*eval_cmd) return RunEval(eval, out);
    if (*stats_cmd) return RunStats(stats, out);
    if (*audit_cmd) return RunAudit(audit, out);
    if (*plot_cmd) return RunPlot(plot, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace wst::tools
