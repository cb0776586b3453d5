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

#include "wst/decoder.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "wst/errors.h"

namespace wst {

namespace {

std::vector<double> Centers(const int* durations, int n) {
  std::vector<double> c(n);
  double cum = 0.0;
  for (int i = 0; i < n; ++i) {
    cum += durations[i];
    c[i] = cum - durations[i] / 2.0;
  }
  return c;
}

// Normalized weights [T x n] for one utterance, evaluated in the log domain.
Mat WeightsFor(const int* durations, const double* sigmas, int n, int frames) {
  const std::vector<double> c = Centers(durations, n);
  Mat w(frames, n);
  for (int t = 0; t < frames; ++t) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      const double d = t + 0.5 - c[i];
      w(t, i) = -d * d / (2.0 * sigmas[i] * sigmas[i]);
      mx = std::max(mx, w(t, i));
    }
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      w(t, i) = std::exp(w(t, i) - mx);
      sum += w(t, i);
    }
    w.row(t) /= sum;
  }
  return w;
}

void CheckUpsampleArgs(const std::vector<int>& durations, const double* sigmas, int n) {
  long total = 0;
  for (int i = 0; i < n; ++i) {
    if (durations[i] < 0) throw ValidationError("negative duration");
    if (sigmas[i] <= 0.0) throw ValidationError("sigma must be positive");
    total += durations[i];
  }
  if (total < 1) throw ValidationError("all durations are zero");
}

}  // namespace

DurationOutputs PredictDurations(Graph& g, const Model& m, Var cond) {
  Var hidden = Relu(Linear(g, m, cond, "duration/hidden"));
  Var out = Linear(g, m, hidden, "duration/out");
  Var log_duration = SliceCols(out, 0, 1);
  Var sigma;
  if (m.config().fixed_sigma) {
    sigma = g.Constant(Mat::Constant(cond.rows(), 1, m.config().fixed_sigma_value));
  } else {
    sigma = AddScalar(Softplus(SliceCols(out, 1, 1)), m.config().min_sigma);
  }
  return {log_duration, sigma};
}

std::vector<int> DecodeDurations(const Eigen::VectorXd& log_duration) {
  std::vector<int> d(static_cast<size_t>(log_duration.size()));
  long total = 0;
  for (Eigen::Index i = 0; i < log_duration.size(); ++i) {
    double v = std::round(std::exp(log_duration(i)) - 1.0);
    d[i] = static_cast<int>(std::clamp(v, 0.0, 1e6));
    total += d[i];
  }
  if (total == 0 && !d.empty()) {
    Eigen::Index best;
    log_duration.maxCoeff(&best);
    d[best] = 1;
  }
  return d;
}

Var GaussianUpsample(Var cond, Var sigma, const BatchLayout& layout) {
  if (!layout.has_frames()) throw ValidationError("upsampling needs durations");
  if (cond.rows() != layout.num_phonemes() || sigma.rows() != layout.num_phonemes() ||
      sigma.cols() != 1) {
    throw ValidationError("upsampling inputs disagree with the layout");
  }
  Graph& g = *cond.graph;
  const Mat& c = cond.value();
  const Mat& s = sigma.value();
  auto weights = std::make_shared<std::vector<Mat>>();
  Mat out(layout.num_frames(), c.cols());
  for (int u = 0; u < layout.num_utterances(); ++u) {
    const Span ps = layout.utt_phonemes[u];
    const Span fs = layout.utt_frames[u];
    std::vector<int> d(layout.durations.begin() + ps.begin,
                       layout.durations.begin() + ps.end());
    CheckUpsampleArgs(d, s.data() + ps.begin, ps.length);
    Mat w = WeightsFor(d.data(), s.data() + ps.begin, ps.length, fs.length);
    out.middleRows(fs.begin, fs.length) = w * c.middleRows(ps.begin, ps.length);
    weights->push_back(std::move(w));
  }
  const std::vector<int> durations = layout.durations;
  const std::vector<Span> utt_ph = layout.utt_phonemes, utt_fr = layout.utt_frames;
  return g.AddNode(
      std::move(out), {cond.id, sigma.id},
      [weights, durations, utt_ph, utt_fr](Graph& g, int self) {
        const int ic = g.input(self, 0), is = g.input(self, 1);
        const Mat& go = g.Grad(self);
        const Mat& c = g.Value(Var{&g, ic});
        const Mat& s = g.Value(Var{&g, is});
        Mat dc = Mat::Zero(c.rows(), c.cols());
        Mat ds = Mat::Zero(s.rows(), 1);
        for (size_t u = 0; u < utt_ph.size(); ++u) {
          const Span ps = utt_ph[u], fs = utt_fr[u];
          const Mat& w = (*weights)[u];
          const Mat gout = go.middleRows(fs.begin, fs.length);
          dc.middleRows(ps.begin, ps.length) = w.transpose() * gout;
          if (!g.WantsGrad(is)) continue;
          const Mat dw = gout * c.middleRows(ps.begin, ps.length).transpose();
          const Eigen::VectorXd dot = w.cwiseProduct(dw).rowwise().sum();
          const Mat da = w.cwiseProduct(dw.colwise() - dot);
          const std::vector<double> centers =
              Centers(durations.data() + ps.begin, ps.length);
          for (int i = 0; i < ps.length; ++i) {
            const double sg = s(ps.begin + i, 0);
            double acc = 0.0;
            for (int t = 0; t < fs.length; ++t) {
              const double d = t + 0.5 - centers[i];
              acc += da(t, i) * d * d;
            }
            ds(ps.begin + i, 0) = acc / (sg * sg * sg);
          }
        }
        g.Accumulate(ic, dc);
        g.Accumulate(is, ds);
      });
}

Mat UpsampleWeights(const std::vector<int>& durations, const Eigen::VectorXd& sigmas) {
  const int n = static_cast<int>(durations.size());
  if (n == 0 || sigmas.size() != n) throw ValidationError("durations/sigmas mismatch");
  CheckUpsampleArgs(durations, sigmas.data(), n);
  int total = 0;
  for (int d : durations) total += d;
  return WeightsFor(durations.data(), sigmas.data(), n, total);
}

Mat GaussianUpsample(const Mat& cond, const std::vector<int>& durations,
                     const Eigen::VectorXd& sigmas) {
  if (cond.rows() != static_cast<Eigen::Index>(durations.size())) {
    throw ValidationError("cond rows differ from duration count");
  }
  return UpsampleWeights(durations, sigmas) * cond;
}

namespace {

Var Dropout(Graph& g, Var x, const DecoderDropout& d) {
  if (d.prenet <= 0.0 || d.rng == nullptr) return x;
  std::bernoulli_distribution keep(1.0 - d.prenet);
  Mat mask(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < mask.size(); ++i) {
    mask.data()[i] = keep(*d.rng) ? 1.0 / (1.0 - d.prenet) : 0.0;
  }
  return Mul(x, g.Constant(std::move(mask)));
}

Var DropPitchFeedback(Graph& g, Var previous, const BatchLayout& layout,
                      const DecoderDropout& d) {
  if (d.pitch_feedback <= 0.0 || d.rng == nullptr) return previous;
  std::bernoulli_distribution drop(d.pitch_feedback);
  Mat mask = Mat::Ones(previous.rows(), previous.cols());
  for (const Span& s : layout.utt_frames) {
    if (!drop(*d.rng)) continue;
    mask.block(s.begin, kPitchPeriodChannel, s.length, 1).setZero();
    mask.block(s.begin, kPitchCorrelationChannel, s.length, 1).setZero();
  }
  return Mul(previous, g.Constant(std::move(mask)));
}

}  // namespace

Var DecodeTeacherForced(Graph& g, const Model& m, Var upsampled, Var teacher,
                        const BatchLayout& layout, const DecoderDropout& dropout) {
  if (teacher.rows() != upsampled.rows() || upsampled.rows() != layout.num_frames()) {
    throw ValidationError("teacher frames differ from upsampled length");
  }
  Var previous = DropPitchFeedback(
      g, GatherRows(teacher, ShiftWithinSpans(layout.utt_frames, teacher.rows(), -1)), layout,
      dropout);
  Var pre1 = Dropout(g, Relu(Linear(g, m, previous, "decoder/prenet1")), dropout);
  Var pre = Dropout(g, Relu(Linear(g, m, pre1, "decoder/prenet2")), dropout);
  Var states = Gru(g, m, ConcatCols({upsampled, pre}), "decoder/gru", layout.utt_frames);
  return Linear(g, m, ConcatCols({states, upsampled}), "decoder/out");
}

Mat DecodeFreeRunning(const Model& m, const Mat& upsampled,
                      const std::vector<Span>& utt_frames) {
  const ModelConfig& c = m.config();
  const int cond = c.cond_dim();
  if (upsampled.cols() != cond) throw ValidationError("upsampled width mismatch");
  const Mat& p1 = m.P("decoder/prenet1/w").value;
  const RowVec p1b = m.P("decoder/prenet1/b").value.row(0);
  const Mat& p2 = m.P("decoder/prenet2/w").value;
  const RowVec p2b = m.P("decoder/prenet2/b").value.row(0);
  const Mat& w_in = m.P("decoder/gru/w_input").value;
  const RowVec b_in = m.P("decoder/gru/b_input").value.row(0);
  const Mat& w_h = m.P("decoder/gru/w_hidden").value;
  const RowVec b_h = m.P("decoder/gru/b_hidden").value.row(0);
  const Mat& w_out = m.P("decoder/out/w").value;
  const RowVec b_out = m.P("decoder/out/b").value.row(0);

  Mat out(upsampled.rows(), kNumChannels);
  for (const Span& s : utt_frames) {
    if (s.length == 0) continue;
    const Mat ups = upsampled.middleRows(s.begin, s.length);
    // Conditioning contributions do not depend on feedback; batch them.
    Mat xp_cond = ups * w_in.topRows(cond);
    xp_cond.rowwise() += b_in;
    Mat out_cond = ups * w_out.bottomRows(cond);
    out_cond.rowwise() += b_out;
    Mat h = Mat::Zero(1, c.decoder_dim);
    RowVec prev = RowVec::Zero(kNumChannels);
    for (int t = 0; t < s.length; ++t) {
      RowVec a = prev * p1;
      a += p1b;
      a = a.cwiseMax(0.0);
      RowVec pre = a * p2;
      pre += p2b;
      pre = pre.cwiseMax(0.0);
      Mat xp = xp_cond.row(t) + pre * w_in.bottomRows(c.prenet_dim);
      h = GruCellStep(xp, h, w_h, b_h);
      RowVec y = h * w_out.topRows(c.decoder_dim);
      y += out_cond.row(t);
      out.row(s.begin + t) = y;
      prev = y;
    }
  }
  return out;
}

AcousticFeatures DecodeFrames(const Model& m, const Mat& upsampled,
                              const AcousticFeatures* teacher) {
  const int frames = static_cast<int>(upsampled.rows());
  if (frames < 1) throw ValidationError("nothing to decode");
  if (teacher == nullptr) {
    return {m.DenormalizeFeatures(DecodeFreeRunning(m, upsampled, {Span{0, frames}}))};
  }
  if (teacher->num_frames() != frames) {
    throw ValidationError("teacher frames differ from upsampled length");
  }
  PhonemeSequence one;
  one.phonemes = {std::string(PhonemeInventory::Symbol(0))};
  one.word_ids = {0};
  BatchLayout layout = BatchLayout::Build({&one}, {{frames}});
  Graph g(false);
  Var out = DecodeTeacherForced(g, m, g.Constant(upsampled),
                                g.Constant(m.NormalizeFeatures(teacher->frames)), layout);
  return {m.DenormalizeFeatures(out.value())};
}

}  // namespace wst
