/*
 * Copyright 2026 The qrange Authors. All Rights Reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <benchmark/benchmark.h>

#include <random>

#include "qrange/generators.hpp"
#include "qrange/interpreter.hpp"
#include "qrange/log.hpp"
#include "qrange/lowering.hpp"
#include "qrange/sira.hpp"
#include "qrange/streamline.hpp"

namespace qrange {
namespace {

void BM_AnalyzeWorkedExample(benchmark::State& state) {
  const Graph g = worked_example_lowered();
  const RangeMap in = worked_example_input_ranges();
  for (auto _ : state) benchmark::DoNotOptimize(analyze(g, in));
}
BENCHMARK(BM_AnalyzeWorkedExample);

void BM_AnalyzeRandomCnn(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const RangedGraph rg = random_cnn(rng);
  const Graph g = lower(rg.graph);
  for (auto _ : state) benchmark::DoNotOptimize(analyze(g, rg.input_ranges));
}
BENCHMARK(BM_AnalyzeRandomCnn);

void BM_StreamlineRandomMlp(benchmark::State& state) {
  log::set_level(log::Level::error);
  std::mt19937_64 rng(2);
  MlpOptions opts;
  opts.min_layers = opts.max_layers = static_cast<int>(state.range(0));
  const RangedGraph rg = random_mlp(rng, opts);
  StreamlineOptions so;
  so.deviation_samples = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(streamline(rg.graph, rg.input_ranges, so));
  }
}
BENCHMARK(BM_StreamlineRandomMlp)->Arg(1)->Arg(3)->Arg(6);

void BM_VerifyWorkedExample(benchmark::State& state) {
  const Graph g = worked_example_lowered();
  const RangeMap r = analyze(g, worked_example_input_ranges());
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(verify_ranges(g, r, n, 0));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_VerifyWorkedExample)->Arg(100)->Arg(1000);

}  // namespace
}  // namespace qrange
