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

#include <algorithm>
#include <random>

#include "qrange/generators.hpp"
#include "qrange/log.hpp"
#include "qrange/sira.hpp"
#include "qrange/threshold.hpp"

namespace qrange {
namespace {

void BM_ConvertTail(benchmark::State& state) {
  log::set_level(log::Level::error);
  std::mt19937_64 rng(3);
  TailOptions opts;
  opts.out_bits = static_cast<int>(state.range(0));
  opts.channels = 32;
  opts.max_domain = int64_t{1} << 12;
  const RangedGraph rg = random_tail(rng, opts);
  const RangeMap r = analyze(rg.graph, rg.input_ranges);
  for (auto _ : state) benchmark::DoNotOptimize(convert_tails(rg.graph, r));
}
BENCHMARK(BM_ConvertTail)->Arg(2)->Arg(4)->Arg(8);

ThresholdTable staircase(int out_bits) {
  const int64_t n = (int64_t{1} << out_bits) - 1;
  return extract_thresholds(
      [n](int64_t x, std::size_t) {
        return static_cast<double>(std::clamp<int64_t>(x / 4, 0, n));
      },
      {0}, {4 * n + 3}, out_bits, 0.0);
}

void BM_EvalParallel(benchmark::State& state) {
  const ThresholdTable t = staircase(static_cast<int>(state.range(0)));
  const int64_t hi = t.domain_hi[0];
  int64_t x = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(eval_parallel(t, x, 0));
    x = x == hi ? 0 : x + 1;
  }
}
BENCHMARK(BM_EvalParallel)->Arg(2)->Arg(4)->Arg(8);

void BM_EvalBinarySearch(benchmark::State& state) {
  const ThresholdTable t = staircase(static_cast<int>(state.range(0)));
  const int64_t hi = t.domain_hi[0];
  int64_t x = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(eval_binary_search(t, x, 0));
    x = x == hi ? 0 : x + 1;
  }
}
BENCHMARK(BM_EvalBinarySearch)->Arg(2)->Arg(4)->Arg(8);

}  // namespace
}  // namespace qrange
