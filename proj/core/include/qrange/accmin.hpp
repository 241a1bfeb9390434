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
#include <optional>
#include <string>
#include <vector>

#include "qrange/graph.hpp"
#include "qrange/interval.hpp"
#include "qrange/sira.hpp"

namespace qrange {

struct AccumulatorAnnotation {
  std::string node;
  int64_t K = 0;
  std::optional<int> input_bits;   // N
  std::optional<int> weight_bits;  // M
  std::optional<int> datatype_bound_bits;
  int sira_bits = 0;
  Interval output_int_range;
};

struct AccminSummary {
  std::size_t layers = 0;
  double mean_sira = 0.0;
  double mean_dtb = 0.0;  // over layers with a datatype bound
  double reduction_vs_32_pct = 0.0;
  double reduction_vs_dtb_pct = 0.0;
};

struct AccminReport {
  std::vector<AccumulatorAnnotation> layers;
  AccminSummary summary;
};

/// Accumulator width from operand widths alone: K-term dot product of N-bit
/// unsigned inputs and M-bit signed weights.
int datatype_bound(int64_t K, int N, int M);

/// Two's-complement accumulator width for integer outputs in [lo, hi]:
/// ceil(log2(max(|lo|, |hi| + 1))) + 1.
int sira_bound(int64_t lo, int64_t hi);
/// Widest element-wise bound over an integer interval. Throws
/// AnalysisError if the interval is not integer-valued.
int sira_bound(const Interval& z);

/// Smallest n with [lo, hi] inside the signed n-bit range.
int signed_width(int64_t lo, int64_t hi);
/// Smallest n >= 1 with hi <= 2^n - 1.
int unsigned_width(int64_t hi);

/// Reinterprets the low `bits` bits of `v` as a two's-complement number.
int64_t wrap_to_bits(int64_t v, int bits);

/// Input vector in the box [lo, hi] that maximizes (or minimizes) the dot
/// product with `w`.
std::vector<int64_t> extremal_input(const std::vector<int64_t>& w,
                                    const std::vector<int64_t>& lo,
                                    const std::vector<int64_t>& hi,
                                    bool maximize);

/// One annotation per MatMul and Conv node of a streamlined graph. Throws
/// AnalysisError for a MAC output without an integer range.
AccminReport annotate_accumulators(const Graph& g, const RangeMap& ranges);

}  // namespace qrange
