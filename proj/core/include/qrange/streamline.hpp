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
#include <string>
#include <string_view>
#include <vector>

#include "qrange/graph.hpp"
#include "qrange/sira.hpp"

namespace qrange {

enum class TargetPolicy { activation_feeding, latest, earliest };

std::string_view to_string(TargetPolicy policy);
TargetPolicy parse_target_policy(std::string_view text);

/// A linear region: a MatMul/Conv followed by single-consumer elementwise
/// operations with a constant operand, ending at the target tensor.
struct TargetSelection {
  std::string target_tensor;
  std::string mac_node;
  std::vector<std::string> region_nodes;  // node names, MAC first
};

/// Gives every constant exactly one consumer and clones linear
/// (constant-operand) Add/Sub/Mul/Div nodes whose output is shared, so that
/// editing a parameter affects one consumer path only.
Graph duplicate_shared_params(const Graph& g);

/// Rewrites Quant(x, s, z) as Div(s) -> Add(z) -> Quant(1, 0) -> Sub(z) ->
/// Mul(s) (Add/Sub omitted when z is zero). Quantizers of constants are
/// folded into an integer constant followed by Sub(z) -> Mul(s).
Graph make_quantizers_explicit(const Graph& g);

/// Linear regions and their target tensors under `policy`. Regions that
/// have no eligible target are omitted.
std::vector<TargetSelection> select_targets(const Graph& g,
                                            TargetPolicy policy);

/// Removes Mul/Div by 1 and Add/Sub of 0 where the operation does not
/// change the tensor shape, then drops unused tensors.
Graph remove_identity_ops(const Graph& g);

struct AggregatedTarget {
  std::string tensor;
  NdArray scale;
  NdArray bias;
  std::vector<std::string> erased;  // contributor tensors set to identity
};

/// Inserts Mul(scale) -> Add(bias) in front of every target, sets the
/// contributing parameters to identity and removes the resulting identity
/// operations. `ranges` must cover the graph inputs; the analysis is re-run
/// after each target. Targets are processed back to front.
Graph aggregate_scale_bias(const Graph& g, const RangeMap& ranges,
                           TargetPolicy policy = TargetPolicy::activation_feeding,
                           std::vector<AggregatedTarget>* applied = nullptr);

struct StreamlineOptions {
  TargetPolicy policy = TargetPolicy::activation_feeding;
  std::size_t deviation_samples = 1000;
  uint64_t seed = 0;
};

struct StreamlineResult {
  Graph graph;
  std::vector<AggregatedTarget> targets;
  /// Largest |original - streamlined| / max(|original|, |streamlined|, 1e-6)
  /// over all graph outputs and sampled inputs.
  double max_rel_deviation = 0.0;
  std::size_t deviation_samples = 0;
};

/// Full pass: lower, duplicate shared parameters, make quantizers explicit,
/// aggregate scales and biases, then measure the output deviation against
/// the input graph with the interpreter.
StreamlineResult streamline(const Graph& g, const RangeMap& input_ranges,
                            const StreamlineOptions& options = {});

/// Relative deviation metric used by streamline().
double max_relative_deviation(const Graph& reference, const Graph& candidate,
                              const RangeMap& input_ranges,
                              std::size_t samples, uint64_t seed);

}  // namespace qrange
