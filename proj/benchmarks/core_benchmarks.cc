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

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "wst/autodiff.h"
#include "wst/corpus.h"
#include "wst/decoder.h"
#include "wst/metrics.h"
#include "wst/training.h"

namespace wst {
namespace {

Mat Random(int rows, int cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Mat m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = n(rng);
  return m;
}

void BM_GruSequenceForwardBackward(benchmark::State& state) {
  const int length = static_cast<int>(state.range(0)), hidden = 128;
  Parameter x{"x", Random(length, 3 * hidden, 1)};
  Parameter w{"w", Random(hidden, 3 * hidden, 2) * 0.05};
  Parameter b{"b", Mat::Zero(1, 3 * hidden)};
  for (auto _ : state) {
    Graph g(true);
    Var out = GruSequence(g.Param(x), g.Param(w), g.Param(b), {{0, length, false}});
    g.Backward(Sum(out));
    benchmark::DoNotOptimize(g.Grad(out).data());
  }
  state.SetItemsProcessed(state.iterations() * length);
}
BENCHMARK(BM_GruSequenceForwardBackward)->Arg(64)->Arg(256);

void BM_GaussianUpsample(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::vector<int> durations(n, 6);
  const Eigen::VectorXd sigmas = Eigen::VectorXd::Constant(n, 1.5);
  const Mat cond = Random(n, 192, 3);
  for (auto _ : state) benchmark::DoNotOptimize(GaussianUpsample(cond, durations, sigmas).data());
  state.SetItemsProcessed(state.iterations() * n * 6);
}
BENCHMARK(BM_GaussianUpsample)->Arg(16)->Arg(64);

void BM_Dtw(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Mat a = Random(n, kNumChannels, 4), b = Random(n + n / 8, kNumChannels, 5);
  for (auto _ : state) benchmark::DoNotOptimize(DtwAlign(a, b).cost);
}
BENCHMARK(BM_Dtw)->Arg(100)->Arg(400);

void BM_TrainingStep(benchmark::State& state) {
  const std::vector<Utterance> corpus = SynthesizeCorpus(8, 1).utterances;
  TrainingConfig config;
  config.batch_size = 8;
  Model m;
  FitFeatureNormalization(m, corpus);
  std::vector<const Utterance*> batch;
  for (const Utterance& u : corpus) batch.push_back(&u);
  for (auto _ : state) benchmark::DoNotOptimize(ComputeGradients(m, batch, config).loss.total);
}
BENCHMARK(BM_TrainingStep)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace wst

BENCHMARK_MAIN();
