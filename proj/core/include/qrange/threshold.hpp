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
#include <functional>
#include <string>
#include <vector>

#include "qrange/graph.hpp"
#include "qrange/sira.hpp"

namespace qrange {

/// Compiled layer tail: per-channel sorted thresholds plus the output bias.
/// Output for input x on channel c is bias[c] + #{i : x >= values[c][i]}.
struct ThresholdTable {
  std::vector<std::vector<double>> values;  // C rows of N = 2^out_bits - 1
  std::vector<double> bias;                 // one entry per row
  int out_bits = 1;
  std::vector<int64_t> domain_lo;           // integer input domain per row
  std::vector<int64_t> domain_hi;

  std::size_t channels() const { return values.size(); }
  std::size_t count() const { return (std::size_t{1} << out_bits) - 1; }

  /// Throws ThresholdError unless every row has N sorted entries inside
  /// [domain_lo, domain_hi + 1].
  void validate() const;
  /// C x N constant tensor as stored in graphs.
  NdArray to_tensor() const;
};

/// Output offset that makes a threshold unit produce the lowest code of an
/// n-bit quantizer: 0 (unsigned), -2^(n-1) (signed) or -2^(n-1)+1 (narrow).
int64_t sign_bias(int n, bool is_signed, bool narrow);

/// Integer output code of a tail for integer input x on channel c.
using TailFunction = std::function<double(int64_t x, std::size_t channel)>;

/// Edge detection over the exhaustively evaluated staircase of `f` on each
/// channel's integer domain. Left pads equal the domain minimum, right pads
/// equal the domain maximum + 1.
ThresholdTable extract_thresholds(const TailFunction& f,
                                  const std::vector<int64_t>& domain_lo,
                                  const std::vector<int64_t>& domain_hi,
                                  int out_bits, double bias);

/// Maximum number of integer points evaluated per channel.
inline constexpr int64_t kMaxThresholdDomain = int64_t{1} << 24;

/// Elementwise chain of nodes from an integer tensor to a terminating Quant.
struct Tail {
  std::string input;               // integer tensor (scale 1, bias 0)
  std::vector<std::string> nodes;  // node names in execution order
};

/// Walks up from the Quant node `anchor` and returns the longest eligible
/// tail, if any.
std::optional<Tail> find_tail(const Graph& g, const RangeMap& ranges,
                              const std::string& anchor);

/// Threshold table of a tail found in `g`. `in_range` must be an integer
/// range with scale 1 and bias 0.
ThresholdTable extract_thresholds(const Graph& g, const Tail& tail,
                                  const ScaledIntRange& in_range);

int64_t eval_parallel(const ThresholdTable& t, int64_t x, std::size_t c);
int64_t eval_binary_search(const ThresholdTable& t, int64_t x, std::size_t c);

struct ConvertedTail {
  std::string anchor;
  std::string multithreshold;
  std::size_t channels = 0;
  int out_bits = 0;
  int64_t max_step = 0;  // largest step height (> 1 needs repeated entries)
};

/// Replaces every eligible tail, starting from the last quantizer, by a
/// MultiThreshold node followed by Sub(z) / Mul(s) for non-unit output
/// quantizers. Ineligible tails are left untouched.
Graph convert_tails(const Graph& g, const RangeMap& ranges,
                    std::vector<ConvertedTail>* converted = nullptr);

}  // namespace qrange
