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

#include <span>
#include <string>

#include "qrange/graph.hpp"
#include "qrange/ndarray.hpp"
#include "qrange/scalar_ops.hpp"

namespace qrange {

/// Elementwise closed interval [lo, hi]. Both bounds are stored at the full
/// tensor shape.
class Interval {
 public:
  Interval() = default;
  /// Broadcasts `lo` and `hi` to a common shape; throws AnalysisError if
  /// lo > hi anywhere.
  Interval(const NdArray& lo, const NdArray& hi);

  static Interval point(const NdArray& value) { return {value, value}; }
  static Interval uniform(const Shape& shape, double lo, double hi);

  const NdArray& lo() const noexcept { return lo_; }
  const NdArray& hi() const noexcept { return hi_; }
  const Shape& shape() const noexcept { return lo_.shape(); }
  std::size_t size() const noexcept { return lo_.size(); }

  bool is_point() const;
  bool is_integer(double tol = kIntegerTolerance) const;
  /// Whether every element of `value` lies in [lo - eps, hi + eps], where
  /// eps scales with max(1, |bound|).
  bool contains(const NdArray& value, double eps = 0.0) const;

  Interval broadcast_to(const Shape& shape) const;
  Interval reshaped(const Shape& shape) const;

  bool operator==(const Interval&) const = default;

 private:
  NdArray lo_;
  NdArray hi_;
};

/// Output interval of an elementwise function over broadcast-compatible
/// input intervals: min/max over all 2^k corner combinations. Division by an
/// interval containing zero throws AnalysisError.
Interval monotonic_propagate(ElementwiseFn f, std::span<const Interval> ins);
Interval monotonic_propagate(ElementwiseFn f, const Interval& a);
Interval monotonic_propagate(ElementwiseFn f, const Interval& a,
                             const Interval& b);

/// Range of W·x for constant W (M x K) and x in an interval of shape K.
/// Exact: every bound is attained by a corner of the input box.
Interval dotprod_propagate(const NdArray& w, const Interval& x);

/// Interval matrix product of a [..., N, K] (or [K]) with b [K, M]. Each
/// scalar product takes the min/max of its four corner products, which is
/// exact whenever one side is a point interval.
Interval interval_matmul(const Interval& a, const Interval& b);

/// Interval 2D convolution (NCHW input, [Co, C/group, kh, kw] weights) with
/// zero padding.
Interval interval_conv(const Interval& x, const Interval& w,
                       const ConvGeometry& geo);

}  // namespace qrange
