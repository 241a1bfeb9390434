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
#include <utility>
#include <vector>

namespace qrange {

enum class EltwiseOp { Mul, Add, ToInt, Max };

std::string_view to_string(EltwiseOp op);
/// Throws CostModelError for an unknown name.
EltwiseOp parse_eltwise_op(std::string_view name);

enum class Granularity { per_tensor, per_channel };

std::string_view to_string(Granularity g);

struct TailConfig {
  int n_i = 8;   // input bits
  int n_p = 16;  // parameter bits
  int n_o = 4;   // output bits
  int64_t C = 64;
  int64_t PE = 1;
  Granularity granularity = Granularity::per_channel;

  /// Throws CostModelError unless every field is positive and PE <= C.
  void validate() const;
  /// Channels holding distinct parameters.
  int64_t effective_channels() const {
    return granularity == Granularity::per_channel ? C : 1;
  }
};

struct CostEstimate {
  double lut_compute = 0.0;
  double lut_memory = 0.0;
  double lut_total = 0.0;
  std::vector<std::pair<std::string, double>> breakdown;
};

/// Regression coefficients of the elementwise meta-kernel.
struct EltwiseCoefficients {
  double alpha;
  double beta;
};
EltwiseCoefficients eltwise_coefficients(EltwiseOp op);

/// Mean relative errors reported for the fitted models; carried as report
/// metadata only.
inline constexpr double kEltwiseModelMre = 0.04;
inline constexpr double kThresholdModelMre = 0.15;

/// LUTs for one elementwise operation. `n_p` is ignored by ToInt and Max.
double eltwise_luts(EltwiseOp op, int n_i, int n_p, int64_t pe);
CostEstimate eltwise_cost(EltwiseOp op, const TailConfig& cfg);

/// Five-node tail: Mul, Add, Max, Mul, ToInt with lossless bit growth, plus
/// memory for the per-channel Mul and Add parameters.
CostEstimate composite_tail_cost(const TailConfig& cfg);

/// Multi-threshold kernel: (2^n_o - 1) thresholds of n_i bits per channel
/// plus n_o * PE comparators of n_i bits.
CostEstimate threshold_cost(const TailConfig& cfg);

enum class TailKind { thresholding, composite };

std::string_view to_string(TailKind k);

struct TailRecommendation {
  TailKind winner = TailKind::thresholding;
  CostEstimate threshold;
  CostEstimate composite;
};

/// The cheaper implementation; ties go to thresholding.
TailRecommendation recommend_tail(const TailConfig& cfg);

struct SweepRow {
  TailConfig cfg;
  TailRecommendation rec;
  bool crossover = false;  // winner differs from the previous row
};

/// Recommendations for n_o in [no_lo, no_hi] with the other fields of
/// `base` held fixed.
std::vector<SweepRow> sweep_output_bits(const TailConfig& base, int no_lo,
                                        int no_hi);

struct FixedPointFormat {
  int W = 0;  // total bits
  int I = 0;  // integer bits including sign
  int F = 0;  // fractional bits
};

/// Narrowest format whose integer part holds max |value| losslessly and
/// whose rounding error is within `max_rel_err` relative to each nonzero
/// value. Throws CostModelError if F would exceed 32.
FixedPointFormat fit_fixed_point(const std::vector<double>& values,
                                 double max_rel_err);

/// Whether every nonzero value is a signed power of two.
bool all_powers_of_two(const std::vector<double>& values);

}  // namespace qrange
