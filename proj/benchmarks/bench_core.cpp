// Copyright 2026 The OBIL Authors.
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

#include "obil/adapter.hpp"
#include "obil/ensemble.hpp"
#include "obil/metrics.hpp"
#include "obil/mlp.hpp"
#include "obil/shift_sim.hpp"

namespace {

using namespace obil;

CalibratedScorer default_scorer(std::size_t dim) {
  NetworkConfig c;
  c.input_dim = dim;
  c.dropout_rate = 0.1;
  c.seed = 1;
  return initialize_scorer(c);
}

void BM_Forward(benchmark::State& state) {
  const auto dim = static_cast<std::size_t>(state.range(0));
  const auto s = default_scorer(dim);
  const Vector x = Vector::Constant(static_cast<Eigen::Index>(dim), 0.3);
  for (auto _ : state) benchmark::DoNotOptimize(forward(s, x));
}
BENCHMARK(BM_Forward)->Arg(1)->Arg(8)->Arg(64);

void BM_ForwardDropout(benchmark::State& state) {
  const auto s = default_scorer(8);
  const Vector x = Vector::Constant(8, 0.3);
  Rng rng(2);
  for (auto _ : state) benchmark::DoNotOptimize(forward(s, x, true, rng));
}
BENCHMARK(BM_ForwardDropout);

void BM_FusedLogLr(benchmark::State& state) {
  LikelihoodRatioEnsemble e;
  e.config.k = 5;
  e.config.mc_samples = static_cast<int>(state.range(0));
  for (std::uint64_t k = 0; k < 5; ++k) {
    auto s = default_scorer(1);
    s.training_qp = static_cast<double>(k + 1);
    e.members.push_back(s);
  }
  const Vector x = Vector::Constant(1, 0.2);
  Rng rng(3);
  for (auto _ : state) benchmark::DoNotOptimize(fused_log_lr(e, x, rng));
}
BENCHMARK(BM_FusedLogLr)->Arg(2)->Arg(30);

void BM_AdapterStep(benchmark::State& state) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 2.0);
  std::vector<double> lrs(4096);
  for (auto& v : lrs) v = n(rng);
  auto s = init_adapter(AdapterConfig{});
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(step(s, {lrs[i++ & 4095]}));
  }
}
BENCHMARK(BM_AdapterStep);

void BM_Auprc(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 1.0);
  std::bernoulli_distribution coin(0.2);
  std::vector<double> scores(n);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = coin(rng) ? 1 : 0;
    scores[i] = g(rng) + labels[i];
  }
  labels[0] = 1;
  for (auto _ : state) benchmark::DoNotOptimize(auprc(scores, labels));
  state.SetComplexityN(static_cast<benchmark::IterationCount>(n));
}
BENCHMARK(BM_Auprc)->Range(1 << 10, 1 << 17)->Complexity();

void BM_TrainGaussian(benchmark::State& state) {
  Rng rng(6);
  const auto data = sample_dataset(GaussianProblem{}, 2000, 0.2, rng);
  NetworkConfig net;
  net.hidden_dims = {16};
  net.seed = 7;
  TrainingConfig tc;
  tc.max_epochs = static_cast<int>(state.range(0));
  tc.early_stop_patience = tc.max_epochs;
  for (auto _ : state) benchmark::DoNotOptimize(train(data, net, tc, LossId::kSquared));
}
BENCHMARK(BM_TrainGaussian)->Arg(5)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
