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
#include <map>
#include <random>
#include <string>
#include <vector>

#include "qrange/graph.hpp"
#include "qrange/sira.hpp"

namespace qrange {

using TensorMap = std::map<std::string, NdArray>;

/// Concrete value of one node's output given its input values.
NdArray eval_node(const Graph& g, const Node& node, const TensorMap& values);

/// Executes the graph in topological order; returns every tensor value
/// (constants included). Throws InterpreterError on missing or mis-shaped
/// inputs and on non-finite results.
TensorMap run_all(const Graph& g, const TensorMap& inputs);
/// Graph outputs only.
TensorMap run(const Graph& g, const TensorMap& inputs);

NdArray matmul(const NdArray& a, const NdArray& b);
NdArray conv2d(const NdArray& x, const NdArray& w, const ConvAttrs& attrs);

/// Running elementwise min/max of every tensor across samples.
struct ExecutionTrace {
  std::map<std::string, Interval> observed;
  std::size_t samples = 0;

  void record(const TensorMap& values);
};

/// Draws one value per dynamic graph input inside its declared range.
/// Each element hits an endpoint with probability `corner_prob` and is
/// uniform otherwise; integer ranges are sampled on their integer grid.
TensorMap sample_inputs(const Graph& g, const RangeMap& ranges,
                        std::mt19937_64& rng, double corner_prob = 0.25);

struct RangeViolation {
  std::string tensor;
  std::size_t sample = 0;
  std::size_t index = 0;
  double value = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

struct TensorSlack {
  double max_slack = 0.0;   // largest (analysis width - observed width)
  double mean_slack = 0.0;
};

struct VerifyReport {
  std::size_t samples = 0;
  uint64_t seed = 0;
  std::size_t violation_count = 0;
  std::vector<RangeViolation> violations;  // first few, for diagnostics
  std::map<std::string, TensorSlack> slack;
  std::map<std::string, std::vector<int64_t>> stuck_channels;
  ExecutionTrace trace;

  bool ok() const { return violation_count == 0; }
};

inline constexpr double kContainmentEpsilon = 1e-9;

/// Instruments `n_samples` executions and checks every observed value
/// against the analysed ranges.
VerifyReport verify_ranges(const Graph& g, const RangeMap& ranges,
                           std::size_t n_samples, uint64_t seed,
                           double eps = kContainmentEpsilon);

}  // namespace qrange
