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

#ifndef WST_METRICS_H_
#define WST_METRICS_H_

#include <string>
#include <utility>
#include <vector>

#include "wst/autodiff.h"
#include "wst/corpus.h"

namespace wst {

inline constexpr double kDefaultVoicingThreshold = 0.3;
inline constexpr double kGrossPitchErrorRatio = 0.2;

// Default KDE bandwidths for the three distribution panels.
inline constexpr double kDurationBandwidth = 0.25;  // z-units
inline constexpr double kPitchBandwidth = 5.0;      // Hz
inline constexpr double kPitchStdBandwidth = 2.0;   // Hz

struct PitchTrack {
  std::vector<double> f0;  // Hz, 0 when unvoiced
  std::vector<bool> voiced;

  int size() const { return static_cast<int>(f0.size()); }
};

PitchTrack ExtractPitch(const AcousticFeatures& features,
                        double voicing_threshold = kDefaultVoicingThreshold);

using AlignmentPath = std::vector<std::pair<int, int>>;

struct DtwResult {
  AlignmentPath path;
  double cost = 0.0;
};

// DTW with steps (1,1), (1,0), (0,1) and Euclidean frame distance over all
// columns. Ties prefer the diagonal, then (1,0), then (0,1).
DtwResult DtwAlign(const Mat& a, const Mat& b);
// DTW over cepstral channels 0-19 only.
DtwResult AlignFeatures(const AcousticFeatures& ref, const AcousticFeatures& est);
AlignmentPath DiagonalPath(int n);

struct PitchErrors {
  double ffe = 0.0;
  double vde = 0.0;
  double gpe = 0.0;
  int frames = 0;
  int voicing_errors = 0;
  int gross_errors = 0;
  int both_voiced = 0;
};

// Frame pairs come from `path` (ref index, est index).
PitchErrors ComputePitchErrors(const PitchTrack& ref, const PitchTrack& est,
                               const AlignmentPath& path);

// Mean over aligned pairs of (10 / ln 10) * sqrt(2 * sum_{c=1..19} diff_c^2).
double ComputeMcd(const Mat& ref, const Mat& est, const AlignmentPath& path);

struct KdeCurve {
  std::vector<double> grid;
  std::vector<double> density;
};

KdeCurve KdeEstimate(const std::vector<double>& samples, double bandwidth, double lo,
                     double hi, int n_points);
double TrapezoidIntegral(const KdeCurve& curve);
// Grid spanning six bandwidths beyond the sample range.
KdeCurve KdeAuto(const std::vector<double>& samples, double bandwidth,
                 int n_points = 1001);

// Population std of f0 over voiced frames; 0 with fewer than two.
double PitchDeviation(const PitchTrack& track);

struct UtteranceMetrics {
  std::string id;
  PitchErrors pitch;
  double mcd = 0.0;
  int ref_frames = 0;
  int est_frames = 0;
};

// DTW-aligns the estimate to the reference and scores it.
UtteranceMetrics EvaluatePair(const std::string& id, const AcousticFeatures& ref,
                              const AcousticFeatures& est);

struct MetricsReport {
  double ffe = 0.0;
  double vde = 0.0;
  double gpe = 0.0;
  double mcd = 0.0;
  int frames_compared = 0;
  std::vector<UtteranceMetrics> per_utterance;
};

// Frame-pooled FFE/VDE/GPE and pair-weighted MCD over all utterances.
MetricsReport Aggregate(std::vector<UtteranceMetrics> items);

}  // namespace wst

#endif  // WST_METRICS_H_
