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

#include "wst/corpus.h"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"
#include "wst/errors.h"

namespace wst {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr std::array<std::string_view, PhonemeInventory::kSize> kSymbols = {
    // vowels
    "aa", "ae", "ah", "ao", "aw", "ay", "eh", "er", "ey", "ih", "iy", "ow", "oy",
    "uh", "uw",
    // consonants
    "b", "ch", "d", "dh", "dx", "f", "g", "hh", "jh", "k", "l", "m", "n", "ng",
    "p", "r", "s", "sh", "t", "th", "v", "w", "y", "z", "zh"};

std::uint32_t ToLittle(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) |
           (v >> 24);
  }
  return v;
}

void WriteTextFile(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << text;
  if (!out) throw ValidationError("failed writing " + path.string());
}

json ReadJsonFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

}  // namespace

std::string_view PhonemeInventory::Symbol(int index) {
  if (index < 0 || index >= kSize) throw ValidationError("phoneme index out of range");
  return kSymbols[index];
}

std::optional<int> PhonemeInventory::Index(std::string_view symbol) {
  for (int i = 0; i < kSize; ++i) {
    if (kSymbols[i] == symbol) return i;
  }
  return std::nullopt;
}

void PhonemeSequence::Validate() const {
  if (phonemes.empty()) throw ValidationError("empty phoneme sequence");
  if (word_ids.size() != phonemes.size()) {
    throw ValidationError("word_ids and phonemes differ in length");
  }
  if (word_ids.front() != 0) throw ValidationError("word_ids must start at 0");
  for (size_t i = 1; i < word_ids.size(); ++i) {
    int step = word_ids[i] - word_ids[i - 1];
    if (step != 0 && step != 1) {
      throw ValidationError("word_ids must be non-decreasing in steps of 1");
    }
  }
  for (const std::string& p : phonemes) {
    if (!PhonemeInventory::Index(p)) throw ValidationError("unknown phoneme '" + p + "'");
  }
}

std::vector<int> PhonemeSequence::PhonemeIndices() const {
  std::vector<int> out;
  out.reserve(phonemes.size());
  for (const std::string& p : phonemes) {
    auto idx = PhonemeInventory::Index(p);
    if (!idx) throw ValidationError("unknown phoneme '" + p + "'");
    out.push_back(*idx);
  }
  return out;
}

PhonemeSequence ParsePhonemeLine(std::string_view line) {
  PhonemeSequence seq;
  std::istringstream words{std::string(line)};
  std::string word;
  int w = 0;
  while (words >> word) {
    size_t start = 0;
    while (start <= word.size()) {
      size_t dot = word.find('.', start);
      std::string ph = word.substr(start, dot == std::string::npos ? std::string::npos
                                                                    : dot - start);
      if (ph.empty()) throw ValidationError("empty phoneme in word '" + word + "'");
      seq.phonemes.push_back(ph);
      seq.word_ids.push_back(w);
      if (dot == std::string::npos) break;
      start = dot + 1;
    }
    ++w;
  }
  seq.Validate();
  return seq;
}

std::string FormatPhonemeLine(const PhonemeSequence& text) {
  std::string out;
  for (size_t i = 0; i < text.phonemes.size(); ++i) {
    if (i > 0) out += text.word_ids[i] == text.word_ids[i - 1] ? "." : " ";
    out += text.phonemes[i];
  }
  return out;
}

void Utterance::Validate() const {
  try {
    text.Validate();
  } catch (const ValidationError& e) {
    throw CorpusError(id, e.what());
  }
  if (durations.size() != text.phonemes.size()) {
    throw CorpusError(id, "durations and phonemes differ in length");
  }
  long total = 0;
  for (int d : durations) {
    if (d < 1) throw CorpusError(id, "non-positive duration");
    total += d;
  }
  if (features.frames.cols() != kNumChannels) {
    throw CorpusError(id, "features must have 22 channels");
  }
  if (features.num_frames() < 1) throw CorpusError(id, "no frames");
  if (total != features.num_frames()) {
    throw CorpusError(id, "duration sum " + std::to_string(total) +
                              " does not match n_frames " +
                              std::to_string(features.num_frames()));
  }
}

int BaseDuration(int phoneme_index) {
  if (PhonemeInventory::IsVowel(phoneme_index)) return 6 + phoneme_index % 5;
  return 3 + (phoneme_index - PhonemeInventory::kNumVowels) % 4;
}

Mat PhonemeTemplates(std::uint64_t template_seed) {
  std::mt19937_64 rng(template_seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  Mat t(PhonemeInventory::kSize, kNumCepstral);
  for (int p = 0; p < PhonemeInventory::kSize; ++p) {
    for (int c = 0; c < kNumCepstral; ++c) t(p, c) = uni(rng);
  }
  return t;
}

SyntheticCorpus SynthesizeCorpus(int n_utterances, std::uint64_t seed,
                                 const GeneratorConfig& config) {
  if (n_utterances < 1) throw ValidationError("n_utterances must be >= 1");
  if (config.min_words < 1 || config.max_words < config.min_words ||
      config.min_phonemes_per_word < 1 ||
      config.max_phonemes_per_word < config.min_phonemes_per_word ||
      config.noise_sigma < 0.0) {
    throw ValidationError("invalid generator config");
  }
  const Mat templates = PhonemeTemplates(config.template_seed);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> n_words_dist(config.min_words, config.max_words);
  std::uniform_int_distribution<int> n_ph_dist(config.min_phonemes_per_word,
                                               config.max_phonemes_per_word);
  std::uniform_int_distribution<int> ph_dist(0, PhonemeInventory::kSize - 1);
  std::uniform_real_distribution<double> factor_dist(-1.0, 1.0);
  std::normal_distribution<double> noise(0.0, config.noise_sigma);

  SyntheticCorpus corpus;
  const int width = std::max(5, static_cast<int>(std::to_string(n_utterances).size()));
  for (int u = 0; u < n_utterances; ++u) {
    Utterance utt;
    std::string num = std::to_string(u);
    utt.id = "utt" + std::string(width - num.size(), '0') + num;
    StyleFactors factors;
    std::vector<int> ph_index;
    const int n_words = n_words_dist(rng);
    for (int w = 0; w < n_words; ++w) {
      const int n_ph = n_ph_dist(rng);
      for (int k = 0; k < n_ph; ++k) {
        int p = ph_dist(rng);
        ph_index.push_back(p);
        utt.text.phonemes.emplace_back(PhonemeInventory::Symbol(p));
        utt.text.word_ids.push_back(w);
      }
      factors.pitch.push_back(factor_dist(rng));
      factors.rate.push_back(factor_dist(rng));
    }
    int total = 0;
    for (size_t i = 0; i < ph_index.size(); ++i) {
      double rate = factors.rate[utt.text.word_ids[i]];
      int d = static_cast<int>(
          std::lround(BaseDuration(ph_index[i]) * std::exp2(-rate * 0.5)));
      d = std::max(d, 1);
      utt.durations.push_back(d);
      total += d;
    }
    Mat frames(total, kNumChannels);
    int t = 0;
    for (size_t i = 0; i < ph_index.size(); ++i) {
      const int p = ph_index[i];
      const float period =
          static_cast<float>(160.0 * std::exp2(-factors.pitch[utt.text.word_ids[i]] * 0.5));
      const float corr = PhonemeInventory::IsVowel(p) ? 0.8f : 0.1f;
      for (int k = 0; k < utt.durations[i]; ++k, ++t) {
        for (int c = 0; c < kNumCepstral; ++c) {
          frames(t, c) = static_cast<float>(templates(p, c) + noise(rng));
        }
        frames(t, kPitchPeriodChannel) = period;
        frames(t, kPitchCorrelationChannel) = corr;
      }
    }
    utt.features.frames = std::move(frames);
    corpus.factors.emplace(utt.id, std::move(factors));
    corpus.utterances.push_back(std::move(utt));
  }
  return corpus;
}

void GenerateSyntheticCorpus(const fs::path& dir, int n_utterances, std::uint64_t seed,
                             const GeneratorConfig& config) {
  SyntheticCorpus corpus = SynthesizeCorpus(n_utterances, seed, config);
  WriteCorpus(dir, corpus.utterances, &corpus.factors);
}

void WriteF32(const fs::path& path, const Mat& frames) {
  std::vector<std::uint32_t> buf(static_cast<size_t>(frames.size()));
  for (Eigen::Index r = 0; r < frames.rows(); ++r) {
    for (Eigen::Index c = 0; c < frames.cols(); ++c) {
      float f = static_cast<float>(frames(r, c));
      buf[r * frames.cols() + c] = ToLittle(std::bit_cast<std::uint32_t>(f));
    }
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(std::uint32_t)));
  if (!out) throw ValidationError("failed writing " + path.string());
}

Mat ReadF32(const fs::path& path, int cols) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read " + path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  const size_t row_bytes = static_cast<size_t>(cols) * 4;
  if (cols <= 0 || bytes.size() % row_bytes != 0) {
    throw ValidationError(path.string() + ": size is not a whole number of rows");
  }
  const Eigen::Index rows = static_cast<Eigen::Index>(bytes.size() / row_bytes);
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    std::uint32_t raw;
    std::memcpy(&raw, bytes.data() + i * 4, 4);
    m.data()[i] = std::bit_cast<float>(ToLittle(raw));
  }
  return m;
}

void WriteCorpus(const fs::path& dir, const std::vector<Utterance>& utterances,
                 const std::map<std::string, StyleFactors>* factors) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw ValidationError("cannot create corpus directory " + dir.string());
  }
  json manifest = json::array();
  for (const Utterance& u : utterances) {
    u.Validate();
    std::string file = u.id + ".f32";
    manifest.push_back({{"id", u.id},
                        {"phonemes", u.text.phonemes},
                        {"word_ids", u.text.word_ids},
                        {"durations", u.durations},
                        {"n_frames", u.num_frames()},
                        {"feature_file", file}});
    WriteF32(dir / file, u.features.frames);
  }
  WriteTextFile(dir / "manifest.json", manifest.dump(2) + "\n");
  if (factors != nullptr) {
    json side = json::object();
    for (const auto& [id, f] : *factors) {
      side[id] = {{"pitch_factor", f.pitch}, {"rate_factor", f.rate}};
    }
    WriteTextFile(dir / "style_factors.json", side.dump(2) + "\n");
  }
}

std::vector<Utterance> LoadCorpus(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.json";
  if (!fs::exists(manifest_path)) {
    throw ValidationError("missing manifest " + manifest_path.string());
  }
  json manifest = ReadJsonFile(manifest_path);
  if (!manifest.is_array()) throw ValidationError("manifest must be a JSON array");
  std::vector<Utterance> out;
  out.reserve(manifest.size());
  for (const json& item : manifest) {
    Utterance u;
    int n_frames = 0;
    std::string file;
    try {
      u.id = item.at("id").get<std::string>();
      u.text.phonemes = item.at("phonemes").get<std::vector<std::string>>();
      u.text.word_ids = item.at("word_ids").get<std::vector<int>>();
      u.durations = item.at("durations").get<std::vector<int>>();
      n_frames = item.at("n_frames").get<int>();
      file = item.at("feature_file").get<std::string>();
    } catch (const json::exception& e) {
      throw CorpusError(u.id.empty() ? "<manifest>" : u.id,
                        std::string("malformed manifest entry: ") + e.what());
    }
    const fs::path fpath = dir / file;
    if (!fs::exists(fpath)) throw CorpusError(u.id, "missing feature file " + file);
    Mat frames;
    try {
      frames = ReadF32(fpath, kNumChannels);
    } catch (const ValidationError& e) {
      throw CorpusError(u.id, std::string("shape mismatch: ") + e.what());
    }
    if (frames.rows() != n_frames) {
      throw CorpusError(u.id, "shape mismatch: manifest n_frames " +
                                  std::to_string(n_frames) + " but file has " +
                                  std::to_string(frames.rows()) + " rows");
    }
    u.features.frames = std::move(frames);
    u.Validate();
    out.push_back(std::move(u));
  }
  std::sort(out.begin(), out.end(),
            [](const Utterance& a, const Utterance& b) { return a.id < b.id; });
  for (size_t i = 1; i < out.size(); ++i) {
    if (out[i].id == out[i - 1].id) throw CorpusError(out[i].id, "duplicate id");
  }
  return out;
}

std::map<std::string, StyleFactors> LoadStyleFactors(const fs::path& dir) {
  json side = ReadJsonFile(dir / "style_factors.json");
  std::map<std::string, StyleFactors> out;
  for (auto it = side.begin(); it != side.end(); ++it) {
    StyleFactors f;
    f.pitch = it.value().at("pitch_factor").get<std::vector<double>>();
    f.rate = it.value().at("rate_factor").get<std::vector<double>>();
    out.emplace(it.key(), std::move(f));
  }
  return out;
}

std::vector<std::string> ReadIdList(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read " + path.string());
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string id;
    if (ss >> id) ids.push_back(id);
  }
  return ids;
}

double DurationNormalization::Normalize(const std::string& phone_class,
                                        double duration) const {
  auto it = stats.find(phone_class);
  if (it == stats.end()) throw ValidationError("no statistics for '" + phone_class + "'");
  return (duration - it->second.mean) / std::max(it->second.std, kStdFloor);
}

DurationNormalization ZNormDurations(const std::vector<Utterance>& corpus) {
  if (corpus.empty()) throw ValidationError("empty corpus");
  DurationNormalization out;
  std::map<std::string, double> sum, sum_sq;
  for (const Utterance& u : corpus) {
    for (size_t i = 0; i < u.durations.size(); ++i) {
      PhoneClassStats& s = out.stats[u.text.phonemes[i]];
      s.count += 1;
      sum[u.text.phonemes[i]] += u.durations[i];
    }
  }
  for (auto& [p, s] : out.stats) s.mean = sum[p] / s.count;
  for (const Utterance& u : corpus) {
    for (size_t i = 0; i < u.durations.size(); ++i) {
      double d = u.durations[i] - out.stats[u.text.phonemes[i]].mean;
      sum_sq[u.text.phonemes[i]] += d * d;
    }
  }
  for (auto& [p, s] : out.stats) s.std = std::sqrt(sum_sq[p] / s.count);
  for (size_t u = 0; u < corpus.size(); ++u) {
    for (size_t i = 0; i < corpus[u].durations.size(); ++i) {
      NormalizedDuration nd;
      nd.utterance = static_cast<int>(u);
      nd.phoneme = static_cast<int>(i);
      nd.phone_class = corpus[u].text.phonemes[i];
      nd.duration = corpus[u].durations[i];
      nd.z = out.Normalize(nd.phone_class, nd.duration);
      out.table.push_back(std::move(nd));
    }
  }
  return out;
}

}  // namespace wst
