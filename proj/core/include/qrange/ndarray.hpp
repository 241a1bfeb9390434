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

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace qrange {

using Shape = std::vector<int64_t>;

/// Absolute tolerance used to decide whether a real value is an integer.
inline constexpr double kIntegerTolerance = 1e-9;

int64_t num_elements(const Shape& shape);
std::string shape_to_string(const Shape& shape);

/// Multidirectional (ONNX/numpy) broadcasting: shapes are left-padded with 1s
/// and each aligned dimension must match or be 1. Throws ShapeError.
Shape broadcast_shapes(const Shape& a, const Shape& b);
Shape broadcast_shapes(std::span<const Shape> shapes);

/// Row-major dense array of doubles. A rank-0 array holds a single value.
class NdArray {
 public:
  NdArray() : data_(1, 0.0) {}
  NdArray(Shape shape, std::vector<double> data);

  static NdArray full(Shape shape, double value);
  static NdArray scalar(double value) { return NdArray({}, {value}); }
  static NdArray vector(std::vector<double> values);

  const Shape& shape() const noexcept { return shape_; }
  int64_t rank() const noexcept { return static_cast<int64_t>(shape_.size()); }
  std::size_t size() const noexcept { return data_.size(); }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }

  /// Materializes this array at `target`; throws if not broadcastable to it.
  NdArray broadcast_to(const Shape& target) const;
  NdArray reshaped(Shape shape) const;

  bool operator==(const NdArray&) const = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

/// For each input, the flat offset of the element that broadcasts into each
/// flat index of `out`. Inputs must be broadcastable to `out`.
std::vector<std::size_t> broadcast_offsets(const Shape& in, const Shape& out);

template <typename F>
NdArray map(const NdArray& a, F&& f) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
  return NdArray(a.shape(), std::move(out));
}

template <typename F>
NdArray map(const NdArray& a, const NdArray& b, F&& f) {
  const Shape shape = broadcast_shapes(a.shape(), b.shape());
  const auto ia = broadcast_offsets(a.shape(), shape);
  const auto ib = broadcast_offsets(b.shape(), shape);
  std::vector<double> out(ia.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(a[ia[i]], b[ib[i]]);
  return NdArray(shape, std::move(out));
}

template <typename F>
NdArray map(const NdArray& a, const NdArray& b, const NdArray& c, F&& f) {
  const Shape shape = broadcast_shapes(
      broadcast_shapes(a.shape(), b.shape()), c.shape());
  const auto ia = broadcast_offsets(a.shape(), shape);
  const auto ib = broadcast_offsets(b.shape(), shape);
  const auto ic = broadcast_offsets(c.shape(), shape);
  std::vector<double> out(ia.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = f(a[ia[i]], b[ib[i]], c[ic[i]]);
  }
  return NdArray(shape, std::move(out));
}

/// Smallest array that broadcasts back to `a`: every axis along which all
/// values are equal collapses to 1 and leading unit axes are dropped.
NdArray compact(const NdArray& a);

/// Collapses `a` so it varies only along `axis` of `full_shape` (result shape
/// is `full_shape` with every other axis set to 1). Returns false if `a`
/// varies along any other axis.
bool reduce_to_axis(const NdArray& a, const Shape& full_shape, int64_t axis,
                    std::vector<double>* per_axis);

bool is_integer_valued(const NdArray& a, double tol = kIntegerTolerance);
bool all_equal_to(const NdArray& a, double value);
bool all_close(const NdArray& a, const NdArray& b, double rel_tol,
               double abs_tol = 0.0);

NdArray slice_axis(const NdArray& a, int64_t axis, int64_t index);

/// Channel axis convention used by per-channel parameters: axis 1 for rank
/// >= 2 tensors (NC, NCHW), axis 0 for vectors.
inline int64_t channel_axis(const Shape& shape) {
  return shape.size() >= 2 ? 1 : 0;
}

/// Index of the channel each flat element of `shape` belongs to.
std::vector<int64_t> channel_of_elements(const Shape& shape);

}  // namespace qrange
