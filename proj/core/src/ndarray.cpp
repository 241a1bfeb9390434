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

#include "qrange/ndarray.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "qrange/error.hpp"

namespace qrange {

int64_t num_elements(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), int64_t{1},
                         std::multiplies<>());
}

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ')';
  return os.str();
}

Shape broadcast_shapes(const Shape& a, const Shape& b) {
  const std::size_t rank = std::max(a.size(), b.size());
  Shape out(rank);
  for (std::size_t i = 0; i < rank; ++i) {
    const int64_t da = i < rank - a.size() ? 1 : a[i - (rank - a.size())];
    const int64_t db = i < rank - b.size() ? 1 : b[i - (rank - b.size())];
    if (da != db && da != 1 && db != 1) {
      throw ShapeError("shapes " + shape_to_string(a) + " and " +
                       shape_to_string(b) + " are not broadcastable");
    }
    out[i] = da == 1 ? db : da;
  }
  return out;
}

Shape broadcast_shapes(std::span<const Shape> shapes) {
  Shape out;
  for (const auto& s : shapes) out = broadcast_shapes(out, s);
  return out;
}

NdArray::NdArray(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  for (auto d : shape_) {
    if (d < 0) throw ShapeError("negative dimension in " + shape_to_string(shape_));
  }
  if (static_cast<int64_t>(data_.size()) != num_elements(shape_)) {
    throw ShapeError("array data has " + std::to_string(data_.size()) +
                     " elements but shape " + shape_to_string(shape_) +
                     " requires " + std::to_string(num_elements(shape_)));
  }
}

NdArray NdArray::full(Shape shape, double value) {
  const auto n = static_cast<std::size_t>(num_elements(shape));
  return NdArray(std::move(shape), std::vector<double>(n, value));
}

NdArray NdArray::vector(std::vector<double> values) {
  Shape shape{static_cast<int64_t>(values.size())};
  return NdArray(std::move(shape), std::move(values));
}

std::vector<std::size_t> broadcast_offsets(const Shape& in, const Shape& out) {
  if (in.size() > out.size()) {
    throw ShapeError("cannot broadcast " + shape_to_string(in) + " to " +
                     shape_to_string(out));
  }
  const std::size_t rank = out.size();
  const std::size_t pad = rank - in.size();
  std::vector<std::size_t> stride(rank, 0);
  std::size_t s = 1;
  for (std::size_t i = in.size(); i-- > 0;) {
    const int64_t d = in[i];
    const int64_t o = out[i + pad];
    if (d != o && d != 1) {
      throw ShapeError("cannot broadcast " + shape_to_string(in) + " to " +
                       shape_to_string(out));
    }
    stride[i + pad] = d == 1 ? 0 : s;
    s *= static_cast<std::size_t>(d);
  }
  const auto total = static_cast<std::size_t>(num_elements(out));
  std::vector<std::size_t> offsets(total);
  std::vector<int64_t> counter(rank, 0);
  std::size_t offset = 0;
  for (std::size_t flat = 0; flat < total; ++flat) {
    offsets[flat] = offset;
    for (std::size_t ax = rank; ax-- > 0;) {
      if (++counter[ax] < out[ax]) {
        offset += stride[ax];
        break;
      }
      offset -= stride[ax] * static_cast<std::size_t>(out[ax] - 1);
      counter[ax] = 0;
    }
  }
  return offsets;
}

NdArray NdArray::broadcast_to(const Shape& target) const {
  if (target == shape_) return *this;
  const auto offsets = broadcast_offsets(shape_, target);
  std::vector<double> out(offsets.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = data_[offsets[i]];
  return NdArray(target, std::move(out));
}

NdArray NdArray::reshaped(Shape shape) const {
  return NdArray(std::move(shape), data_);
}

NdArray slice_axis(const NdArray& a, int64_t axis, int64_t index) {
  const Shape& shape = a.shape();
  if (axis < 0 || axis >= a.rank() || index < 0 || index >= shape[axis]) {
    throw ShapeError("slice out of range for shape " + shape_to_string(shape));
  }
  int64_t outer = 1, inner = 1;
  for (int64_t i = 0; i < axis; ++i) outer *= shape[i];
  for (int64_t i = axis + 1; i < a.rank(); ++i) inner *= shape[i];
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(outer * inner));
  for (int64_t o = 0; o < outer; ++o) {
    const int64_t base = (o * shape[axis] + index) * inner;
    for (int64_t i = 0; i < inner; ++i) out.push_back(a[base + i]);
  }
  Shape out_shape = shape;
  out_shape[axis] = 1;
  return NdArray(std::move(out_shape), std::move(out));
}

namespace {

bool constant_along(const NdArray& a, int64_t axis) {
  const Shape& shape = a.shape();
  int64_t inner = 1;
  for (int64_t i = axis + 1; i < a.rank(); ++i) inner *= shape[i];
  const int64_t dim = shape[axis];
  for (std::size_t flat = 0; flat < a.size(); ++flat) {
    const int64_t coord = (static_cast<int64_t>(flat) / inner) % dim;
    if (coord == 0) continue;
    if (a[flat] != a[flat - static_cast<std::size_t>(coord * inner)]) {
      return false;
    }
  }
  return true;
}

}  // namespace

NdArray compact(const NdArray& a) {
  NdArray cur = a;
  for (int64_t axis = 0; axis < cur.rank(); ++axis) {
    if (cur.shape()[axis] > 1 && constant_along(cur, axis)) {
      cur = slice_axis(cur, axis, 0);
    }
  }
  Shape shape = cur.shape();
  auto first = std::find_if(shape.begin(), shape.end(),
                            [](int64_t d) { return d != 1; });
  shape.erase(shape.begin(), first);
  return cur.reshaped(std::move(shape));
}

bool reduce_to_axis(const NdArray& a, const Shape& full_shape, int64_t axis,
                    std::vector<double>* per_axis) {
  const NdArray full = a.broadcast_to(full_shape);
  if (full_shape.empty()) {
    *per_axis = {full[0]};
    return true;
  }
  const int64_t dim = full_shape[axis];
  int64_t inner = 1;
  for (std::size_t i = axis + 1; i < full_shape.size(); ++i) inner *= full_shape[i];
  std::vector<double> out(static_cast<std::size_t>(dim));
  std::vector<bool> seen(out.size(), false);
  for (std::size_t flat = 0; flat < full.size(); ++flat) {
    const auto c = static_cast<std::size_t>((static_cast<int64_t>(flat) / inner) % dim);
    if (!seen[c]) {
      out[c] = full[flat];
      seen[c] = true;
    } else if (out[c] != full[flat]) {
      return false;
    }
  }
  *per_axis = std::move(out);
  return true;
}

bool is_integer_valued(const NdArray& a, double tol) {
  return std::all_of(a.values().begin(), a.values().end(), [tol](double v) {
    return std::isfinite(v) && std::abs(v - std::nearbyint(v)) < tol;
  });
}

bool all_equal_to(const NdArray& a, double value) {
  return std::all_of(a.values().begin(), a.values().end(),
                     [value](double v) { return v == value; });
}

bool all_close(const NdArray& a, const NdArray& b, double rel_tol,
               double abs_tol) {
  Shape shape;
  try {
    shape = broadcast_shapes(a.shape(), b.shape());
  } catch (const ShapeError&) {
    return false;
  }
  const auto ia = broadcast_offsets(a.shape(), shape);
  const auto ib = broadcast_offsets(b.shape(), shape);
  for (std::size_t i = 0; i < ia.size(); ++i) {
    const double x = a[ia[i]], y = b[ib[i]];
    const double tol = abs_tol + rel_tol * std::max(std::abs(x), std::abs(y));
    if (!(std::abs(x - y) <= tol)) return false;
  }
  return true;
}

std::vector<int64_t> channel_of_elements(const Shape& shape) {
  const auto n = static_cast<std::size_t>(num_elements(shape));
  std::vector<int64_t> out(n, 0);
  if (shape.empty()) return out;
  const int64_t axis = channel_axis(shape);
  int64_t inner = 1;
  for (std::size_t i = axis + 1; i < shape.size(); ++i) inner *= shape[i];
  for (std::size_t flat = 0; flat < n; ++flat) {
    out[flat] = (static_cast<int64_t>(flat) / inner) % shape[axis];
  }
  return out;
}

}  // namespace qrange
