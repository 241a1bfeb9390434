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

#include "qrange/scaled_int_range.hpp"

#include <cmath>

#include "qrange/error.hpp"

namespace qrange {

std::string_view to_string(ContributionRole role) {
  return role == ContributionRole::scale ? "scale" : "bias";
}

bool ScaledIntRange::is_unit() const {
  return is_scaled_int() && all_equal_to(*scale, 1.0) &&
         all_equal_to(*bias, 0.0);
}

ScaledIntRange ScaledIntRange::from_interval(Interval range) {
  ScaledIntRange r;
  r.range = std::move(range);
  return r;
}

ScaledIntRange ScaledIntRange::from_scaled_int(const Interval& int_range,
                                               const NdArray& scale,
                                               const NdArray& bias,
                                               ContributorMap contributors) {
  const Shape shape = broadcast_shapes(
      broadcast_shapes(int_range.shape(), scale.shape()), bias.shape());
  const Interval zi = int_range.shape() == shape ? int_range
                                                 : int_range.broadcast_to(shape);
  const NdArray zl = map(zi.lo(), [](double v) { return std::nearbyint(v); });
  const NdArray zh = map(zi.hi(), [](double v) { return std::nearbyint(v); });
  const NdArray a = map(zl, scale, bias,
                        [](double z, double s, double b) { return s * z + b; });
  const NdArray c = map(zh, scale, bias,
                        [](double z, double s, double b) { return s * z + b; });
  const NdArray lo = map(a, c, [](double x, double y) { return std::min(x, y); });
  const NdArray hi = map(a, c, [](double x, double y) { return std::max(x, y); });
  ScaledIntRange r;
  r.range = Interval(lo, hi);
  r.int_range = Interval(zl, zh);
  r.scale = compact(scale);
  r.bias = compact(bias);
  r.contributors = std::move(contributors);
  return r;
}

void ScaledIntRange::check() const {
  if (!int_range) return;
  if (!scale || !bias) {
    throw AnalysisError("integer range without scale and bias");
  }
  if (!int_range->is_integer()) {
    throw AnalysisError("integer range has non-integer endpoints");
  }
  const auto expect = from_scaled_int(*int_range, *scale, *bias);
  if (expect.range.shape() != range.shape() ||
      !all_close(expect.range.lo(), range.lo(), 1e-9, 1e-12) ||
      !all_close(expect.range.hi(), range.hi(), 1e-9, 1e-12)) {
    throw AnalysisError("range is not scale * int_range + bias");
  }
}

std::optional<ScaledIntRange> scaled_int_view(const ScaledIntRange& r) {
  if (r.is_scaled_int()) return r;
  if (r.range.is_point() && r.range.is_integer()) {
    return ScaledIntRange::from_scaled_int(r.range, NdArray::scalar(1.0),
                                           NdArray::scalar(0.0));
  }
  return std::nullopt;
}

}  // namespace qrange
