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

#include <map>
#include <string>

#include "qrange/graph.hpp"
#include "qrange/scaled_int_range.hpp"

namespace qrange {

using RangeMap = std::map<std::string, ScaledIntRange>;

/// A node input as seen by a propagation handler. `is_param` marks graph
/// initializers, which are the only operands treated as constant
/// parameters.
struct Operand {
  std::string name;
  const ScaledIntRange& range;
  bool is_param = false;
};

ScaledIntRange handle_quant(const ScaledIntRange& in, const QuantSpec& spec,
                            const Operand& scale, const Operand& zero_point);
ScaledIntRange handle_add(const Operand& a, const Operand& b);
ScaledIntRange handle_sub(const Operand& a, const Operand& b);
ScaledIntRange handle_mul(const Operand& a, const Operand& b);
ScaledIntRange handle_div(const Operand& a, const Operand& b);
ScaledIntRange handle_matmul(const Operand& a, const Operand& b);
ScaledIntRange handle_conv(const Operand& x, const Operand& w,
                           const ConvAttrs& attrs);
ScaledIntRange handle_monotonic_activation(const ScaledIntRange& in,
                                           ElementwiseFn f);
ScaledIntRange handle_multithreshold(const ScaledIntRange& in,
                                     const Operand& thresholds,
                                     const MultiThresholdAttrs& attrs);

/// Range of a node's output given the ranges of its inputs.
ScaledIntRange propagate_node(const Graph& g, const Node& node,
                              const RangeMap& ranges);

/// Walks a lowered graph in topological order and computes a range for
/// every tensor. Every dynamic graph input needs an entry in
/// `input_ranges`; constants become point intervals.
RangeMap analyze(const Graph& g, const RangeMap& input_ranges);

/// Output channels whose range is a single point, per non-constant tensor
/// of rank >= 1.
std::map<std::string, std::vector<int64_t>> stuck_channels(
    const Graph& g, const RangeMap& ranges);

}  // namespace qrange
