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

#include "qrange/interval.hpp"

#include <array>
#include <cmath>
#include <limits>

#include "qrange/error.hpp"

namespace qrange {

Interval::Interval(const NdArray& lo, const NdArray& hi) {
  const Shape shape = broadcast_shapes(lo.shape(), hi.shape());
  lo_ = lo.shape() == shape ? lo : lo.broadcast_to(shape);
  hi_ = hi.shape() == shape ? hi : hi.broadcast_to(shape);
  for (std::size_t i = 0; i < lo_.size(); ++i) {
    if (!(lo_[i] <= hi_[i])) {
      throw AnalysisError("interval with lo " + std::to_string(lo_[i]) +
                          " > hi " + std::to_string(hi_[i]) +
                          " at flat index " + std::to_string(i));
    }
  }
}

Interval Interval::uniform(const Shape& shape, double lo, double hi) {
  return {NdArray::full(shape, lo), NdArray::full(shape, hi)};
}

bool Interval::is_point() const { return lo_ == hi_; }

bool Interval::is_integer(double tol) const {
  return is_integer_valued(lo_, tol) && is_integer_valued(hi_, tol);
}

bool Interval::contains(const NdArray& value, double eps) const {
  if (broadcast_shapes(shape(), value.shape()) != value.shape()) return false;
  const auto idx = broadcast_offsets(shape(), value.shape());
  for (std::size_t i = 0; i < value.size(); ++i) {
    const double l = lo_[idx[i]];
    const double h = hi_[idx[i]];
    const double v = value[i];
    if (std::isnan(v)) return false;
    if (v < l - eps * std::max(1.0, std::abs(l))) return false;
    if (v > h + eps * std::max(1.0, std::abs(h))) return false;
  }
  return true;
}

Interval Interval::broadcast_to(const Shape& shape) const {
  return {lo_.broadcast_to(shape), hi_.broadcast_to(shape)};
}

Interval Interval::reshaped(const Shape& shape) const {
  return {lo_.reshaped(shape), hi_.reshaped(shape)};
}

Interval monotonic_propagate(ElementwiseFn f, std::span<const Interval> ins) {
  const int k = static_cast<int>(ins.size());
  if (k != arity(f)) {
    throw AnalysisError("elementwise function expects " +
                        std::to_string(arity(f)) + " operands, got " +
                        std::to_string(k));
  }
  Shape shape = ins[0].shape();
  for (int i = 1; i < k; ++i) shape = broadcast_shapes(shape, ins[i].shape());
  std::array<std::vector<std::size_t>, 2> offs;
  for (int i = 0; i < k; ++i) offs[i] = broadcast_offsets(ins[i].shape(), shape);
  const auto n = static_cast<std::size_t>(num_elements(shape));
  if (f == ElementwiseFn::div) {
    const auto& d = ins[1];
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (d.lo()[i] <= 0.0 && d.hi()[i] >= 0.0) {
        throw AnalysisError("division by an interval containing zero");
      }
    }
  }
  std::vector<double> lo(n), hi(n);
  for (std::size_t e = 0; e < n; ++e) {
    double mn = std::numeric_limits<double>::infinity();
    double mx = -mn;
    for (int corner = 0; corner < (1 << k); ++corner) {
      std::array<double, 2> v{0.0, 0.0};
      for (int i = 0; i < k; ++i) {
        const auto& bound = (corner >> i) & 1 ? ins[i].hi() : ins[i].lo();
        v[i] = bound[offs[i][e]];
      }
      const double r = apply(f, v[0], v[1]);
      mn = std::min(mn, r);
      mx = std::max(mx, r);
    }
    lo[e] = mn;
    hi[e] = mx;
  }
  return {NdArray(shape, std::move(lo)), NdArray(shape, std::move(hi))};
}

Interval monotonic_propagate(ElementwiseFn f, const Interval& a) {
  return monotonic_propagate(f, std::span<const Interval>(&a, 1));
}

Interval monotonic_propagate(ElementwiseFn f, const Interval& a,
                             const Interval& b) {
  const std::array<Interval, 2> ins{a, b};
  return monotonic_propagate(f, ins);
}

namespace {

inline void product_bounds(double al, double ah, double bl, double bh,
                           double& lo, double& hi) {
  if (bl == bh) {
    const double p = al * bl;
    const double q = ah * bl;
    lo = std::min(p, q);
    hi = std::max(p, q);
    return;
  }
  if (al == ah) {
    const double p = al * bl;
    const double q = al * bh;
    lo = std::min(p, q);
    hi = std::max(p, q);
    return;
  }
  const double c[4] = {al * bl, al * bh, ah * bl, ah * bh};
  lo = std::min(std::min(c[0], c[1]), std::min(c[2], c[3]));
  hi = std::max(std::max(c[0], c[1]), std::max(c[2], c[3]));
}

}  // namespace

Interval dotprod_propagate(const NdArray& w, const Interval& x) {
  if (w.rank() != 2 || x.shape().size() != 1 || x.shape()[0] != w.shape()[1]) {
    throw ShapeError("dot product expects W of shape MxK and x of shape K, got " +
                     shape_to_string(w.shape()) + " and " +
                     shape_to_string(x.shape()));
  }
  const int64_t k = w.shape()[1];
  const Interval col = x.reshaped({k, 1});
  const Interval out = interval_matmul(Interval::point(w), col);
  return out.reshaped({w.shape()[0]});
}

Interval interval_matmul(const Interval& a, const Interval& b) {
  const Shape& as = a.shape();
  const Shape& bs = b.shape();
  if (as.empty() || bs.size() != 2 || as.back() != bs[0]) {
    throw ShapeError("interval matmul shape mismatch: " + shape_to_string(as) +
                     " x " + shape_to_string(bs));
  }
  const int64_t k = bs[0];
  const int64_t m = bs[1];
  const int64_t rows = num_elements(as) / k;
  Shape out_shape = as;
  out_shape.back() = m;
  std::vector<double> lo(static_cast<std::size_t>(rows * m), 0.0);
  std::vector<double> hi(lo.size(), 0.0);
  for (int64_t r = 0; r < rows; ++r) {
    for (int64_t kk = 0; kk < k; ++kk) {
      const double al = a.lo()[r * k + kk];
      const double ah = a.hi()[r * k + kk];
      for (int64_t j = 0; j < m; ++j) {
        double pl, ph;
        product_bounds(al, ah, b.lo()[kk * m + j], b.hi()[kk * m + j], pl, ph);
        lo[r * m + j] += pl;
        hi[r * m + j] += ph;
      }
    }
  }
  return {NdArray(out_shape, std::move(lo)), NdArray(out_shape, std::move(hi))};
}

Interval interval_conv(const Interval& x, const Interval& w,
                       const ConvGeometry& geo) {
  const Shape out_shape{geo.batch, geo.out_channels, geo.out_h, geo.out_w};
  std::vector<double> lo(static_cast<std::size_t>(num_elements(out_shape)), 0.0);
  std::vector<double> hi(lo.size(), 0.0);
  const int64_t cin_g = geo.in_per_group();
  const int64_t cout_g = geo.out_per_group();
  std::size_t o = 0;
  for (int64_t n = 0; n < geo.batch; ++n) {
    for (int64_t co = 0; co < geo.out_channels; ++co) {
      const int64_t g = co / cout_g;
      for (int64_t oh = 0; oh < geo.out_h; ++oh) {
        for (int64_t ow = 0; ow < geo.out_w; ++ow, ++o) {
          double sl = 0.0, sh = 0.0;
          for (int64_t ci = 0; ci < cin_g; ++ci) {
            const int64_t c = g * cin_g + ci;
            for (int64_t kh = 0; kh < geo.kernel_h; ++kh) {
              const int64_t ih = oh * geo.stride_h + kh - geo.pad_top;
              if (ih < 0 || ih >= geo.in_h) continue;
              for (int64_t kw = 0; kw < geo.kernel_w; ++kw) {
                const int64_t iw = ow * geo.stride_w + kw - geo.pad_left;
                if (iw < 0 || iw >= geo.in_w) continue;
                const auto xi = static_cast<std::size_t>(
                    ((n * geo.in_channels + c) * geo.in_h + ih) * geo.in_w + iw);
                const auto wi = static_cast<std::size_t>(
                    ((co * cin_g + ci) * geo.kernel_h + kh) * geo.kernel_w + kw);
                double pl, ph;
                product_bounds(x.lo()[xi], x.hi()[xi], w.lo()[wi], w.hi()[wi],
                               pl, ph);
                sl += pl;
                sh += ph;
              }
            }
          }
          lo[o] = sl;
          hi[o] = sh;
        }
      }
    }
  }
  return {NdArray(out_shape, std::move(lo)), NdArray(out_shape, std::move(hi))};
}

}  // namespace qrange
