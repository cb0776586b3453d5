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

#include "wst/metrics.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "wst/errors.h"

namespace wst {

PitchTrack ExtractPitch(const AcousticFeatures& features, double voicing_threshold) {
  if (features.frames.cols() != kNumChannels) {
    throw ValidationError("pitch extraction needs 22-channel features");
  }
  PitchTrack track;
  const int n = features.num_frames();
  track.f0.resize(n);
  track.voiced.resize(n);
  for (int t = 0; t < n; ++t) {
    const bool voiced = features.frames(t, kPitchCorrelationChannel) >= voicing_threshold;
    track.voiced[t] = voiced;
    if (voiced) {
      const double period = features.frames(t, kPitchPeriodChannel);
      if (!(period > 0.0)) {
        throw ValidationError("non-positive pitch period on voiced frame " +
                              std::to_string(t));
      }
      track.f0[t] = kSampleRate / period;
    } else {
      track.f0[t] = 0.0;
    }
  }
  return track;
}

DtwResult DtwAlign(const Mat& a, const Mat& b) {
  const int n = static_cast<int>(a.rows()), m = static_cast<int>(b.rows());
  if (n == 0 || m == 0) throw ValidationError("DTW needs non-empty sequences");
  if (a.cols() != b.cols()) throw ValidationError("DTW inputs differ in width");
  const double inf = std::numeric_limits<double>::infinity();
  Mat cost(n, m);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      const double d = (a.row(i) - b.row(j)).norm();
      if (i == 0 && j == 0) {
        cost(i, j) = d;
        continue;
      }
      const double diag = (i > 0 && j > 0) ? cost(i - 1, j - 1) : inf;
      const double up = i > 0 ? cost(i - 1, j) : inf;
      const double left = j > 0 ? cost(i, j - 1) : inf;
      cost(i, j) = d + std::min({diag, up, left});
    }
  }
  DtwResult r;
  r.cost = cost(n - 1, m - 1);
  int i = n - 1, j = m - 1;
  r.path.emplace_back(i, j);
  while (i > 0 || j > 0) {
    const double diag = (i > 0 && j > 0) ? cost(i - 1, j - 1) : inf;
    const double up = i > 0 ? cost(i - 1, j) : inf;
    const double left = j > 0 ? cost(i, j - 1) : inf;
    if (diag <= up && diag <= left) {
      --i;
      --j;
    } else if (up <= left) {
      --i;
    } else {
      --j;
    }
    r.path.emplace_back(i, j);
  }
  std::reverse(r.path.begin(), r.path.end());
  return r;
}

DtwResult AlignFeatures(const AcousticFeatures& ref, const AcousticFeatures& est) {
  return DtwAlign(ref.frames.leftCols(kNumCepstral), est.frames.leftCols(kNumCepstral));
}

AlignmentPath DiagonalPath(int n) {
  AlignmentPath p;
  p.reserve(n);
  for (int i = 0; i < n; ++i) p.emplace_back(i, i);
  return p;
}

PitchErrors ComputePitchErrors(const PitchTrack& ref, const PitchTrack& est,
                               const AlignmentPath& path) {
  if (path.empty()) throw ValidationError("no aligned frames");
  PitchErrors e;
  e.frames = static_cast<int>(path.size());
  for (const auto& [i, j] : path) {
    if (i < 0 || i >= ref.size() || j < 0 || j >= est.size()) {
      throw ValidationError("alignment index out of range");
    }
    const bool rv = ref.voiced[i], ev = est.voiced[j];
    if (rv != ev) {
      ++e.voicing_errors;
    } else if (rv) {
      ++e.both_voiced;
      if (std::abs(est.f0[j] - ref.f0[i]) > kGrossPitchErrorRatio * ref.f0[i]) {
        ++e.gross_errors;
      }
    }
  }
  e.vde = static_cast<double>(e.voicing_errors) / e.frames;
  e.gpe = e.both_voiced > 0 ? static_cast<double>(e.gross_errors) / e.both_voiced : 0.0;
  e.ffe = static_cast<double>(e.voicing_errors + e.gross_errors) / e.frames;
  return e;
}

double ComputeMcd(const Mat& ref, const Mat& est, const AlignmentPath& path) {
  if (path.empty()) throw ValidationError("no aligned frames");
  if (ref.cols() < kNumCepstral || est.cols() < kNumCepstral) {
    throw ValidationError("MCD needs at least 20 cepstral channels");
  }
  const double k = 10.0 / std::numbers::ln10;
  double total = 0.0;
  for (const auto& [i, j] : path) {
    if (i < 0 || i >= ref.rows() || j < 0 || j >= est.rows()) {
      throw ValidationError("alignment index out of range");
    }
    const double sq =
        (ref.row(i).segment(1, kNumCepstral - 1) - est.row(j).segment(1, kNumCepstral - 1))
            .squaredNorm();
    total += k * std::sqrt(2.0 * sq);
  }
  return total / static_cast<double>(path.size());
}

KdeCurve KdeEstimate(const std::vector<double>& samples, double bandwidth, double lo,
                     double hi, int n_points) {
  if (samples.empty()) throw ValidationError("KDE needs at least one sample");
  if (!(bandwidth > 0.0)) throw ValidationError("KDE bandwidth must be positive");
  if (n_points < 2 || !(hi > lo)) throw ValidationError("KDE grid is degenerate");
  KdeCurve c;
  c.grid.resize(n_points);
  c.density.assign(n_points, 0.0);
  const double norm = 1.0 / (samples.size() * bandwidth * std::sqrt(2.0 * std::numbers::pi));
  for (int k = 0; k < n_points; ++k) {
    const double x = lo + (hi - lo) * k / (n_points - 1);
    c.grid[k] = x;
    double acc = 0.0;
    for (double s : samples) {
      const double u = (x - s) / bandwidth;
      acc += std::exp(-0.5 * u * u);
    }
    c.density[k] = acc * norm;
  }
  return c;
}

double TrapezoidIntegral(const KdeCurve& curve) {
  double area = 0.0;
  for (size_t k = 1; k < curve.grid.size(); ++k) {
    area += 0.5 * (curve.density[k] + curve.density[k - 1]) *
            (curve.grid[k] - curve.grid[k - 1]);
  }
  return area;
}

KdeCurve KdeAuto(const std::vector<double>& samples, double bandwidth, int n_points) {
  if (samples.empty()) throw ValidationError("KDE needs at least one sample");
  auto [mn, mx] = std::minmax_element(samples.begin(), samples.end());
  return KdeEstimate(samples, bandwidth, *mn - 6.0 * bandwidth, *mx + 6.0 * bandwidth,
                     n_points);
}

double PitchDeviation(const PitchTrack& track) {
  double sum = 0.0, sum_sq = 0.0;
  int n = 0;
  for (int t = 0; t < track.size(); ++t) {
    if (!track.voiced[t]) continue;
    sum += track.f0[t];
    ++n;
  }
  if (n < 2) return 0.0;
  const double mean = sum / n;
  for (int t = 0; t < track.size(); ++t) {
    if (!track.voiced[t]) continue;
    sum_sq += (track.f0[t] - mean) * (track.f0[t] - mean);
  }
  return std::sqrt(sum_sq / n);
}

UtteranceMetrics EvaluatePair(const std::string& id, const AcousticFeatures& ref,
                              const AcousticFeatures& est) {
  UtteranceMetrics u;
  u.id = id;
  u.ref_frames = ref.num_frames();
  u.est_frames = est.num_frames();
  const DtwResult align = AlignFeatures(ref, est);
  u.pitch = ComputePitchErrors(ExtractPitch(ref), ExtractPitch(est), align.path);
  u.mcd = ComputeMcd(ref.frames, est.frames, align.path);
  return u;
}

MetricsReport Aggregate(std::vector<UtteranceMetrics> items) {
  MetricsReport r;
  long frames = 0, voicing = 0, gross = 0, both = 0;
  double mcd_weighted = 0.0;
  for (const UtteranceMetrics& u : items) {
    frames += u.pitch.frames;
    voicing += u.pitch.voicing_errors;
    gross += u.pitch.gross_errors;
    both += u.pitch.both_voiced;
    mcd_weighted += u.mcd * u.pitch.frames;
  }
  if (frames > 0) {
    r.ffe = static_cast<double>(voicing + gross) / frames;
    r.vde = static_cast<double>(voicing) / frames;
    r.gpe = both > 0 ? static_cast<double>(gross) / both : 0.0;
    r.mcd = mcd_weighted / frames;
  }
  r.frames_compared = static_cast<int>(frames);
  r.per_utterance = std::move(items);
  return r;
}

}  // namespace wst
