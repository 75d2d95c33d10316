// Copyright 2026 The scorekit Authors
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

// Serial reference kernels against their OpenMP versions.

#include <benchmark/benchmark.h>

#include <vector>

#include "scorekit/diffusion.hpp"
#include "scorekit/dsp.hpp"
#include "scorekit/kernels.hpp"
#include "scorekit/oracle.hpp"
#include "scorekit/rng.hpp"
#include "scorekit/schedule.hpp"
#include "scorekit/scorenet.hpp"
#include "scorekit/training.hpp"

using namespace scorekit;

namespace {

const GmmPrior& toy_prior() {
  static const GmmPrior p = GmmPrior::scalar({0.3, 0.7}, {-2.0, 2.0}, {0.1, 0.1});
  return p;
}

template <bool Parallel>
void BM_SampleMany(benchmark::State& state) {
  const GmmScore score(toy_prior());
  const auto plan = make_plan(NoiseSchedule::for_data(toy_prior().overall_mean_square()), 64, 2.3);
  const auto count = static_cast<std::size_t>(state.range(0));
  const Rng rng(1);
  for (auto _ : state) {
    auto out = Parallel ? kernels::omp::sample_many(score, {}, 0, plan, 1, count, rng)
                        : kernels::serial::sample_many(score, {}, 0, plan, 1, count, rng);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void BM_BatchGradient(benchmark::State& state) {
  ScoreNetConfig cfg;
  cfg.x_dim = 1;
  ScoreNet net(cfg);
  const auto batch = draw_batch(GmmData(toy_prior()), NoiseSchedule::for_data(4.1),
                                static_cast<std::size_t>(state.range(0)), 3, 0);
  std::vector<double> grad(net.param_count());
  for (auto _ : state) {
    const double loss = Parallel ? kernels::omp::batch_dsm_gradient(net, batch, grad)
                                 : kernels::serial::batch_dsm_gradient(net, batch, grad);
    benchmark::DoNotOptimize(loss);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void BM_Stft(benchmark::State& state) {
  Rng rng(2);
  std::vector<double> x(static_cast<std::size_t>(state.range(0)));
  rng.fill_normal(x);
  const StftConfig cfg{1024, 256};
  for (auto _ : state) {
    auto s = Parallel ? kernels::omp::stft(x, cfg) : kernels::serial::stft(x, cfg);
    benchmark::DoNotOptimize(s.data.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_SampleMany<false>)->Name("sample_many/serial")->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SampleMany<true>)->Name("sample_many/omp")->Arg(1024)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_BatchGradient<false>)->Name("batch_gradient/serial")->Arg(128)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_BatchGradient<true>)->Name("batch_gradient/omp")->Arg(128)->Unit(benchmark::kMicrosecond)->UseRealTime();
BENCHMARK(BM_Stft<false>)->Name("stft/serial")->Arg(16000 * 10)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Stft<true>)->Name("stft/omp")->Arg(16000 * 10)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
