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

#ifndef WST_CORPUS_H_
#define WST_CORPUS_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wst/autodiff.h"

namespace wst {

// Acoustic frame layout: 20 cepstral-like coefficients, pitch period (samples
// at 24 kHz) and pitch correlation.
inline constexpr int kNumChannels = 22;
inline constexpr int kNumCepstral = 20;
inline constexpr int kPitchPeriodChannel = 20;
inline constexpr int kPitchCorrelationChannel = 21;
inline constexpr double kSampleRate = 24000.0;

// Fixed 40-symbol phone set: 15 vowels followed by 25 consonants.
class PhonemeInventory {
 public:
  static constexpr int kSize = 40;
  static constexpr int kNumVowels = 15;

  static std::string_view Symbol(int index);
  static std::optional<int> Index(std::string_view symbol);
  static bool IsVowel(int index) { return index >= 0 && index < kNumVowels; }
};

struct PhonemeSequence {
  std::vector<std::string> phonemes;
  std::vector<int> word_ids;

  int num_phonemes() const { return static_cast<int>(phonemes.size()); }
  int num_words() const { return word_ids.empty() ? 0 : word_ids.back() + 1; }
  // Throws ValidationError on a broken word partition or unknown symbol.
  void Validate() const;
  std::vector<int> PhonemeIndices() const;
};

// Parses one text line: words separated by whitespace, phonemes within a word
// separated by '.', e.g. "hh.ah.l.ow w.er.l.d".
PhonemeSequence ParsePhonemeLine(std::string_view line);
std::string FormatPhonemeLine(const PhonemeSequence& text);

struct AcousticFeatures {
  Mat frames;  // n_frames x kNumChannels

  int num_frames() const { return static_cast<int>(frames.rows()); }
};

struct Utterance {
  std::string id;
  PhonemeSequence text;
  std::vector<int> durations;  // frames per phoneme
  AcousticFeatures features;

  int num_frames() const { return features.num_frames(); }
  // Throws CorpusError naming the utterance.
  void Validate() const;
};

// Latent per-word ground truth of the synthetic generator. Never seen by the
// model; used by tests to check controllability.
struct StyleFactors {
  std::vector<double> pitch;
  std::vector<double> rate;
};

struct GeneratorConfig {
  int min_words = 2;
  int max_words = 8;
  int min_phonemes_per_word = 1;
  int max_phonemes_per_word = 5;
  double noise_sigma = 0.05;
  // Seeds the per-phoneme cepstral templates; independent of the corpus seed
  // so corpora with different seeds share one "voice".
  std::uint64_t template_seed = 20211;
};

struct SyntheticCorpus {
  std::vector<Utterance> utterances;
  std::map<std::string, StyleFactors> factors;
};

// Baseline duration in frames of a phoneme before rate scaling.
int BaseDuration(int phoneme_index);
// kSize x kNumCepstral template matrix.
Mat PhonemeTemplates(std::uint64_t template_seed);

// Deterministic in-memory generation. Feature values are float-representable
// so that a write/load round trip is exact.
SyntheticCorpus SynthesizeCorpus(int n_utterances, std::uint64_t seed,
                                 const GeneratorConfig& config = {});

// Generates and writes a corpus directory (manifest.json, *.f32 and the
// style_factors.json sidecar).
void GenerateSyntheticCorpus(const std::filesystem::path& dir, int n_utterances,
                             std::uint64_t seed, const GeneratorConfig& config = {});

void WriteCorpus(const std::filesystem::path& dir,
                 const std::vector<Utterance>& utterances,
                 const std::map<std::string, StyleFactors>* factors = nullptr);

// Loads and validates a corpus; result is sorted by id.
std::vector<Utterance> LoadCorpus(const std::filesystem::path& dir);
std::map<std::string, StyleFactors> LoadStyleFactors(const std::filesystem::path& dir);

// Raw little-endian float32, row-major.
void WriteF32(const std::filesystem::path& path, const Mat& frames);
Mat ReadF32(const std::filesystem::path& path, int cols);

// Reads one id per non-empty line.
std::vector<std::string> ReadIdList(const std::filesystem::path& path);

struct PhoneClassStats {
  double mean = 0.0;
  double std = 0.0;  // population
  int count = 0;
};

struct NormalizedDuration {
  int utterance = 0;
  int phoneme = 0;
  std::string phone_class;
  int duration = 0;
  double z = 0.0;
};

struct DurationNormalization {
  std::map<std::string, PhoneClassStats> stats;
  std::vector<NormalizedDuration> table;

  // Throws ValidationError for a class absent from the statistics.
  double Normalize(const std::string& phone_class, double duration) const;
};

inline constexpr double kStdFloor = 1e-6;

DurationNormalization ZNormDurations(const std::vector<Utterance>& corpus);

}  // namespace wst

#endif  // WST_CORPUS_H_
