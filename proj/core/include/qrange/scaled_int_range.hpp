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
#include <optional>
#include <string>

#include "qrange/interval.hpp"

namespace qrange {

/// How a constant tensor influences a scaled-integer range: through the
/// scale (erased by setting it to 1) or only through the bias (erased by
/// setting it to 0).
enum class ContributionRole { scale, bias };

std::string_view to_string(ContributionRole role);

using ContributorMap = std::map<std::string, ContributionRole>;

/// Value range of a tensor, optionally in scaled-integer form
/// v = scale * z + bias with z inside an integer interval.
struct ScaledIntRange {
  Interval range;
  std::optional<Interval> int_range;
  std::optional<NdArray> scale;
  std::optional<NdArray> bias;
  ContributorMap contributors;

  bool is_scaled_int() const { return int_range && scale && bias; }
  const Shape& shape() const { return range.shape(); }

  /// True when the tensor is a pure integer: scale 1 and bias 0.
  bool is_unit() const;

  /// Throws AnalysisError if the affine relation between range and
  /// int_range does not hold or the integer bounds are not integers.
  void check() const;

  static ScaledIntRange from_interval(Interval range);
  /// Builds a scaled-integer range, deriving the full-precision interval
  /// from the integer one. Negative scale elements swap the endpoints.
  static ScaledIntRange from_scaled_int(const Interval& int_range,
                                        const NdArray& scale,
                                        const NdArray& bias,
                                        ContributorMap contributors = {});

  bool operator==(const ScaledIntRange&) const = default;
};

/// Scaled-integer view of a range: the range itself when it already carries
/// scale and bias, an integer-valued point interval read as scale 1 / bias 0,
/// or nothing.
std::optional<ScaledIntRange> scaled_int_view(const ScaledIntRange& r);

}  // namespace qrange
