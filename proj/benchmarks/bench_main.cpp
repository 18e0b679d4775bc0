// Copyright 2026 The sigverify Authors
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

#include <benchmark/benchmark.h>

#include <vector>

#include "sigverify/eval.hpp"
#include "sigverify/hmm.hpp"
#include "sigverify/io.hpp"
#include "sigverify/random.hpp"
#include "sigverify/signal.hpp"
#include "sigverify/synth.hpp"

using namespace sigverify;

namespace {

const synth::UserTemplate& user() {
  static const auto u = synth::generate_user(synth::user_seed(2005, 0));
  return u;
}

const std::vector<signal::FeatureSequence>& enrollment() {
  static const auto seqs = [] {
    std::vector<signal::FeatureSequence> out;
    for (int i = 1; i <= 3; ++i) out.push_back(signal::pipeline(synth::sample_genuine(user(), 1, i)));
    for (int i = 1; i <= 2; ++i) out.push_back(signal::pipeline(synth::sample_genuine(user(), 2, i)));
    return out;
  }();
  return seqs;
}

void BM_ParseSvc(benchmark::State& state) {
  const auto text = io::write_svc(synth::sample_genuine(user(), 3, 1));
  for (auto _ : state) benchmark::DoNotOptimize(io::parse_svc(text));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_ParseSvc);

void BM_Pipeline(benchmark::State& state) {
  const auto sig = synth::sample_genuine(user(), 3, 1);
  for (auto _ : state) benchmark::DoNotOptimize(signal::pipeline(sig));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * sig.size()));
}
BENCHMARK(BM_Pipeline);

void BM_Train(benchmark::State& state) {
  const hmm::Topology topology{2, static_cast<std::size_t>(state.range(0))};
  for (auto _ : state) benchmark::DoNotOptimize(hmm::train(enrollment(), topology));
}
BENCHMARK(BM_Train)->Arg(4)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_ViterbiScore(benchmark::State& state) {
  const auto model = hmm::train(enrollment(), {2, static_cast<std::size_t>(state.range(0))}).model;
  const auto probe = signal::pipeline(synth::sample_genuine(user(), 3, 2));
  for (auto _ : state) benchmark::DoNotOptimize(hmm::score(model, probe));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * probe.n_samples()));
}
BENCHMARK(BM_ViterbiScore)->Arg(4)->Arg(32);

void BM_ForwardLoglik(benchmark::State& state) {
  const auto model = hmm::train(enrollment()).model;
  const auto probe = signal::pipeline(synth::sample_genuine(user(), 3, 2));
  for (auto _ : state) benchmark::DoNotOptimize(hmm::forward_loglik(model, probe));
}
BENCHMARK(BM_ForwardLoglik);

void BM_ComputeEer(benchmark::State& state) {
  Rng rng(1);
  std::vector<double> gen, imp;
  for (std::int64_t i = 0; i < state.range(0) / 10; ++i) gen.push_back(rng.normal(2.0, 1.0));
  for (std::int64_t i = 0; i < state.range(0); ++i) imp.push_back(rng.normal(0.0, 1.0));
  for (auto _ : state) benchmark::DoNotOptimize(eval::compute_eer(gen, imp));
}
BENCHMARK(BM_ComputeEer)->Arg(10000)->Arg(500000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
