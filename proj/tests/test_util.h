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

#ifndef WST_TESTS_TEST_UTIL_H_
#define WST_TESTS_TEST_UTIL_H_

#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <string>

#include "wst/autodiff.h"
#include "wst/corpus.h"
#include "wst/model.h"

namespace wst::testing {

// Central-difference gradient of a scalar function of `x`.
inline Mat NumericGradient(const std::function<double(const Mat&)>& f, Mat x,
                           double h = 1e-6) {
  Mat grad(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double saved = x.data()[i];
    x.data()[i] = saved + h;
    const double up = f(x);
    x.data()[i] = saved - h;
    const double down = f(x);
    x.data()[i] = saved;
    grad.data()[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

// max |a - b| / max(|a|, |b|, floor) over entries.
inline double MaxRelativeError(const Mat& a, const Mat& b, double floor = 1e-3) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double scale = std::max({std::abs(a.data()[i]), std::abs(b.data()[i]), floor});
    worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]) / scale);
  }
  return worst;
}

inline Mat RandomMat(int rows, int cols, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path TempDir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("wst_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// Small dimensions for finite-difference checks.
inline ModelConfig TinyConfig() {
  ModelConfig c;
  c.num_tokens = 4;
  c.token_dim = 6;
  c.phoneme_embed_dim = 5;
  c.enc_dim = 6;
  c.word_seq_dim = 4;
  c.ref_dim = 5;
  c.ref_conv_channels = 3;
  c.attention_dim = 4;
  c.duration_hidden = 5;
  c.prenet_dim = 3;
  c.decoder_dim = 5;
  c.prior_dim = 6;
  return c;
}

using ScalarGraph = std::function<Var(Graph&, const Model&)>;

// Relative error between the analytic gradient of `loss` with respect to the
// named parameter and a central-difference estimate.
inline double ParamGradientError(Model m, const std::string& name, const ScalarGraph& loss,
                                 double h = 1e-6) {
  Graph g(true);
  Var out = loss(g, m);
  g.Backward(out);
  auto grads = g.ParamGrads();
  Parameter& p = m.params().Get(name);
  auto it = grads.find(&p);
  const Mat analytic =
      it != grads.end() ? it->second : Mat::Zero(p.value.rows(), p.value.cols());
  auto f = [&](const Mat& v) {
    const Mat saved = p.value;
    p.value = v;
    Graph eval(false);
    const double y = loss(eval, m).value()(0, 0);
    p.value = saved;
    return y;
  };
  return MaxRelativeError(analytic, NumericGradient(f, p.value, h));
}

inline PhonemeSequence Text(const std::string& line) { return ParsePhonemeLine(line); }

}  // namespace wst::testing

#endif  // WST_TESTS_TEST_UTIL_H_
