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

#pragma once

#include <cstdint>
#include <random>

#include "qrange/graph.hpp"
#include "qrange/sira.hpp"

namespace qrange {

/// A graph together with ranges for its dynamic inputs.
struct RangedGraph {
  Graph graph;
  RangeMap input_ranges;
};

/// Two-input, three-output worked example before lowering: weight and input
/// quantizers, Gemm, BatchNormalization, Relu and an unsigned output
/// quantizer.
Graph worked_example_graph();
/// The same network in lowered form, with tensors mm, mm_b, bn_m, bn_n, r
/// and qy.
Graph worked_example_lowered();
RangeMap worked_example_input_ranges();

/// Streamlined integer MatMul from the worked example: quantized input
/// codes times integer weights, followed by the aggregated tail.
RangedGraph accumulator_example();

/// Uniform box [lo, hi] for every dynamic input.
RangeMap uniform_input_ranges(const Graph& g, double lo, double hi);

struct MlpOptions {
  int min_layers = 1;
  int max_layers = 3;
  int64_t max_width = 6;
  bool allow_gemm = true;
  bool allow_batchnorm = true;
};

/// Random quantized MLP on [1, K] inputs: weight quantizers (per-channel,
/// zero-point 0), Gemm or MatMul + Add, optional BatchNormalization, Relu
/// and activation quantizers with random signedness, narrow range and
/// zero-points.
RangedGraph random_mlp(std::mt19937_64& rng, const MlpOptions& opts = {});

/// Random small CNN: standard Conv with bias and padding, BatchNormalization,
/// a depthwise Conv whose input may carry per-channel scales, and a
/// residual Add of two quantizers sharing their scales.
RangedGraph random_cnn(std::mt19937_64& rng);

struct TailOptions {
  int out_bits = 2;
  int64_t channels = 4;
  int64_t max_domain = int64_t{1} << 14;
};

/// Streamlined layer tail on an integer [1, C] input: per-channel Mul and
/// Add with positive scales, optional Relu and an output quantizer.
RangedGraph random_tail(std::mt19937_64& rng, const TailOptions& opts);

}  // namespace qrange
