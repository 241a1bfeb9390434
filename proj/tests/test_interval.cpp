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

#include <gtest/gtest.h>

#include <random>

#include "qrange/error.hpp"
#include "qrange/interpreter.hpp"
#include "qrange/interval.hpp"
#include "qrange/scaled_int_range.hpp"

namespace qrange {
namespace {

Interval iv(std::vector<double> lo, std::vector<double> hi) {
  return Interval(NdArray::vector(std::move(lo)), NdArray::vector(std::move(hi)));
}

TEST(Interval, RejectsInvertedBounds) {
  EXPECT_THROW(iv({1.0}, {0.0}), AnalysisError);
}

TEST(Interval, PointAndInteger) {
  const Interval p = Interval::point(NdArray::vector({2.0, -3.0}));
  EXPECT_TRUE(p.is_point());
  EXPECT_TRUE(p.is_integer());
  EXPECT_FALSE(iv({0.5}, {1.0}).is_integer());
}

TEST(MonotonicPropagate, Examples) {
  const Interval r = monotonic_propagate(ElementwiseFn::relu, iv({-2}, {3}));
  EXPECT_EQ(r, iv({0}, {3}));
  const Interval m =
      monotonic_propagate(ElementwiseFn::mul, iv({-7}, {7}), iv({-5}, {5}));
  EXPECT_EQ(m, iv({-35}, {35}));
  const Interval s = monotonic_propagate(ElementwiseFn::sub, iv({1, 0}, {2, 4}),
                                         iv({0, -1}, {3, 1}));
  EXPECT_EQ(s, iv({-2, -1}, {2, 5}));
  EXPECT_THROW(
      monotonic_propagate(ElementwiseFn::div, iv({1}, {2}), iv({-1}, {1})),
      AnalysisError);
}

TEST(MonotonicPropagate, BroadcastsPerChannelParameters) {
  const Interval x(NdArray({2, 1}, {-1, 0}), NdArray({2, 1}, {1, 2}));
  const Interval c = Interval::point(NdArray::vector({2.0, -1.0, 0.5}));
  const Interval y = monotonic_propagate(ElementwiseFn::mul, x, c);
  EXPECT_EQ(y.shape(), (Shape{2, 3}));
  EXPECT_EQ(y.lo(), NdArray({2, 3}, {-2, -1, -0.5, 0, -2, 0}));
  EXPECT_EQ(y.hi(), NdArray({2, 3}, {2, 1, 0.5, 4, 0, 1}));
}

TEST(MonotonicPropagate, ContainmentProperty) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> d(-5.0, 5.0);
  const ElementwiseFn fns[] = {ElementwiseFn::relu, ElementwiseFn::add,
                               ElementwiseFn::mul,  ElementwiseFn::sub,
                               ElementwiseFn::max,  ElementwiseFn::min,
                               ElementwiseFn::sigmoid, ElementwiseFn::div};
  for (const auto f : fns) {
    for (int trial = 0; trial < 20; ++trial) {
      double a0 = d(rng), a1 = d(rng), b0 = d(rng), b1 = d(rng);
      if (a0 > a1) std::swap(a0, a1);
      if (b0 > b1) std::swap(b0, b1);
      if (f == ElementwiseFn::div && b0 <= 0.0 && b1 >= 0.0) {
        b0 = 0.5;
        b1 = 3.0;
      }
      const Interval a = iv({a0}, {a1}), b = iv({b0}, {b1});
      const Interval out = arity(f) == 1 ? monotonic_propagate(f, a)
                                         : monotonic_propagate(f, a, b);
      std::uniform_real_distribution<double> da(a0, a1), db(b0, b1);
      for (int s = 0; s < 500; ++s) {
        const double v = apply(f, da(rng), db(rng));
        EXPECT_GE(v, out.lo()[0] - 1e-12);
        EXPECT_LE(v, out.hi()[0] + 1e-12);
      }
    }
  }
}

TEST(DotprodPropagate, WorkedExampleColumns) {
  const Interval x = iv({-7, -5}, {7, 5});
  const Interval y = dotprod_propagate(NdArray({3, 2}, {-8, 7, 7, 0, -8, -8}), x);
  EXPECT_EQ(y, iv({-91, -49, -96}, {91, 49, 96}));
  const Interval z = dotprod_propagate(NdArray({2, 2}, {0, 0, 0, 0}), x);
  EXPECT_TRUE(z.is_point());
  EXPECT_TRUE(all_equal_to(z.lo(), 0.0));
}

TEST(DotprodPropagate, MatchesBruteForceCorners) {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> wd(-8, 7), xd(-6, 6), kd(1, 12);
  for (int trial = 0; trial < 40; ++trial) {
    const int k = kd(rng);
    std::vector<double> w(static_cast<std::size_t>(k)), lo(w.size()),
        hi(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
      w[i] = wd(rng);
      lo[i] = xd(rng);
      hi[i] = lo[i] + std::abs(xd(rng));
    }
    const Interval y =
        dotprod_propagate(NdArray({1, k}, w), iv(lo, hi));
    double best_lo = 1e300, best_hi = -1e300;
    for (uint32_t mask = 0; mask < (1u << k); ++mask) {
      double acc = 0.0;
      for (int i = 0; i < k; ++i) {
        acc += w[static_cast<std::size_t>(i)] *
               ((mask >> i) & 1u ? hi[static_cast<std::size_t>(i)]
                                 : lo[static_cast<std::size_t>(i)]);
      }
      best_lo = std::min(best_lo, acc);
      best_hi = std::max(best_hi, acc);
    }
    EXPECT_EQ(y.lo()[0], best_lo);
    EXPECT_EQ(y.hi()[0], best_hi);
  }
}

TEST(IntervalMatmul, ContainsSampledProducts) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> d(-2.0, 2.0);
  std::vector<double> alo(6), ahi(6), blo(12), bhi(12);
  for (std::size_t i = 0; i < 6; ++i) {
    alo[i] = d(rng);
    ahi[i] = alo[i] + std::abs(d(rng));
  }
  for (std::size_t i = 0; i < 12; ++i) {
    blo[i] = d(rng);
    bhi[i] = blo[i] + std::abs(d(rng));
  }
  const Interval a(NdArray({2, 3}, alo), NdArray({2, 3}, ahi));
  const Interval b(NdArray({3, 4}, blo), NdArray({3, 4}, bhi));
  const Interval y = interval_matmul(a, b);
  ASSERT_EQ(y.shape(), (Shape{2, 4}));
  for (int s = 0; s < 2000; ++s) {
    std::vector<double> av(6), bv(12);
    for (std::size_t i = 0; i < 6; ++i) {
      av[i] = std::uniform_real_distribution<double>(alo[i], ahi[i])(rng);
    }
    for (std::size_t i = 0; i < 12; ++i) {
      bv[i] = std::uniform_real_distribution<double>(blo[i], bhi[i])(rng);
    }
    const NdArray v = matmul(NdArray({2, 3}, av), NdArray({3, 4}, bv));
    EXPECT_TRUE(y.contains(v, 1e-12));
  }
}

TEST(IntervalConv, ExactForPointWeights) {
  // 1x1x3x3 input, one 2x2 filter: every output bound is attained at a
  // corner of the input box.
  const NdArray w({1, 1, 2, 2}, {1, -2, 3, 0});
  ConvAttrs attrs;
  const auto geo = conv_geometry({1, 1, 3, 3}, w.shape(), attrs);
  const Interval x = Interval::uniform({1, 1, 3, 3}, -1.0, 2.0);
  const Interval y = interval_conv(x, Interval::point(w), geo);
  ASSERT_EQ(y.shape(), (Shape{1, 1, 2, 2}));
  for (std::size_t i = 0; i < y.size(); ++i) {
    EXPECT_EQ(y.lo()[i], -1.0 * 1 + 2.0 * -2 + -1.0 * 3);
    EXPECT_EQ(y.hi()[i], 2.0 * 1 + -1.0 * -2 + 2.0 * 3);
  }
}

TEST(IntervalConv, PaddingContributesZero) {
  const NdArray w({1, 1, 3, 3}, std::vector<double>(9, 1.0));
  ConvAttrs attrs;
  attrs.pad = {1, 1, 1, 1};
  const auto geo = conv_geometry({1, 1, 2, 2}, w.shape(), attrs);
  const Interval y = interval_conv(Interval::uniform({1, 1, 2, 2}, 1.0, 1.0),
                                   Interval::point(w), geo);
  EXPECT_EQ(y.hi(), NdArray({1, 1, 2, 2}, {4, 4, 4, 4}));
}

TEST(ScaledIntRange, AffineInvariantAndNegativeScale) {
  const auto r = ScaledIntRange::from_scaled_int(
      iv({-3}, {5}), NdArray::scalar(-2.0), NdArray::scalar(0.0));
  EXPECT_EQ(r.range, iv({-10}, {6}));
  EXPECT_NO_THROW(r.check());

  ScaledIntRange bad = r;
  bad.range = iv({-10}, {7});
  EXPECT_THROW(bad.check(), AnalysisError);
  ScaledIntRange frac = r;
  frac.int_range = iv({-3.5}, {5});
  EXPECT_THROW(frac.check(), AnalysisError);
}

TEST(ScaledIntRange, ViewOfIntegerPoint) {
  const auto p = ScaledIntRange::from_interval(
      Interval::point(NdArray::vector({3.0, -1.0})));
  const auto v = scaled_int_view(p);
  ASSERT_TRUE(v.has_value());
  EXPECT_TRUE(v->is_unit());
  EXPECT_FALSE(scaled_int_view(ScaledIntRange::from_interval(
      Interval::point(NdArray::vector({0.5})))));
}

}  // namespace
}  // namespace qrange
