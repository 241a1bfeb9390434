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

#include "qrange/costmodel.hpp"
#include "qrange/error.hpp"

namespace qrange {
namespace {

TEST(Eltwise, CoefficientExamples) {
  EXPECT_NEAR(eltwise_luts(EltwiseOp::Mul, 8, 8, 1), 199.52, 1e-9);
  EXPECT_NEAR(eltwise_luts(EltwiseOp::Add, 8, 8, 2), 88.0, 1e-9);
  EXPECT_NEAR(eltwise_luts(EltwiseOp::Max, 1, 0, 1), 25.0, 1e-9);
  EXPECT_NEAR(eltwise_luts(EltwiseOp::ToInt, 10, 0, 1), 55.0, 1e-9);
  EXPECT_EQ(parse_eltwise_op("ToInt"), EltwiseOp::ToInt);
  EXPECT_THROW(parse_eltwise_op("Sub"), CostModelError);
}

TEST(Eltwise, MonotoneInEveryArgument) {
  for (EltwiseOp op : {EltwiseOp::Mul, EltwiseOp::Add, EltwiseOp::ToInt,
                       EltwiseOp::Max}) {
    for (int n = 1; n < 24; ++n) {
      EXPECT_LE(eltwise_luts(op, n, 8, 2), eltwise_luts(op, n + 1, 8, 2));
      EXPECT_LE(eltwise_luts(op, 8, n, 2), eltwise_luts(op, 8, n + 1, 2));
      EXPECT_LE(eltwise_luts(op, 8, 8, n), eltwise_luts(op, 8, 8, n + 1));
    }
  }
}

TEST(TailCost, CompositeExample) {
  TailConfig cfg;
  cfg.n_i = 8;
  cfg.n_p = 16;
  cfg.C = 64;
  cfg.PE = 1;
  const CostEstimate c = composite_tail_cost(cfg);
  EXPECT_NEAR(c.lut_memory, 32.0, 1e-9);
  const double compute = eltwise_luts(EltwiseOp::Mul, 8, 16, 1) +
                         eltwise_luts(EltwiseOp::Add, 24, 16, 1) +
                         eltwise_luts(EltwiseOp::Max, 25, 0, 1) +
                         eltwise_luts(EltwiseOp::Mul, 25, 16, 1) +
                         eltwise_luts(EltwiseOp::ToInt, 25, 0, 1);
  EXPECT_NEAR(c.lut_compute, compute, 1e-9);
  EXPECT_NEAR(c.lut_total, compute + 32.0, 1e-9);
  EXPECT_EQ(c.breakdown.size(), 6u);
  cfg.granularity = Granularity::per_tensor;
  EXPECT_NEAR(composite_tail_cost(cfg).lut_memory, 0.5, 1e-12);
}

TEST(TailCost, ThresholdExample) {
  TailConfig cfg;
  cfg.n_i = 8;
  cfg.n_o = 4;
  cfg.C = 64;
  cfg.PE = 1;
  const CostEstimate t = threshold_cost(cfg);
  EXPECT_NEAR(t.lut_memory, 120.0, 1e-9);
  EXPECT_NEAR(t.lut_compute, 32.0, 1e-9);
  EXPECT_NEAR(t.lut_total, 152.0, 1e-9);
}

TEST(TailCost, InvalidConfigs) {
  TailConfig cfg;
  cfg.PE = 0;
  EXPECT_THROW(threshold_cost(cfg), CostModelError);
  cfg.PE = 128;
  cfg.C = 64;
  EXPECT_THROW(composite_tail_cost(cfg), CostModelError);
  cfg = TailConfig{};
  cfg.n_o = 0;
  EXPECT_THROW(recommend_tail(cfg), CostModelError);
}

TEST(TailCost, ThresholdGrowsWithOutputBits) {
  TailConfig cfg;
  double prev = 0.0;
  for (int no = 1; no <= 16; ++no) {
    cfg.n_o = no;
    const double t = threshold_cost(cfg).lut_total;
    EXPECT_GT(t, prev);
    prev = t;
  }
}

TEST(Recommend, SmallOutputsThresholdLargeOutputsComposite) {
  TailConfig cfg;
  cfg.n_i = 8;
  cfg.n_p = 16;
  cfg.C = 64;
  cfg.PE = 1;
  cfg.n_o = 2;
  EXPECT_EQ(recommend_tail(cfg).winner, TailKind::thresholding);
  cfg.n_o = 16;
  EXPECT_EQ(recommend_tail(cfg).winner, TailKind::composite);
}

TEST(Sweep, SingleCrossoverAtDefaults) {
  TailConfig cfg;
  cfg.n_i = 16;
  cfg.n_p = 16;
  cfg.C = 256;
  cfg.PE = 4;
  const auto rows = sweep_output_bits(cfg, 2, 12);
  ASSERT_EQ(rows.size(), 11u);
  int crossings = 0;
  for (const auto& r : rows) crossings += r.crossover;
  EXPECT_EQ(crossings, 1);
  EXPECT_EQ(rows.front().rec.winner, TailKind::thresholding);
  EXPECT_EQ(rows.back().rec.winner, TailKind::composite);
  EXPECT_THROW(sweep_output_bits(cfg, 5, 4), CostModelError);
}

TEST(FixedPoint, Examples) {
  auto f = fit_fixed_point({0.1}, 1e-3);
  EXPECT_EQ(f.I, 1);
  EXPECT_EQ(f.F, 11);
  EXPECT_EQ(f.W, 12);
  f = fit_fixed_point({0.5, -0.5, 0.0}, 0.0);
  EXPECT_EQ(f.I, 1);
  EXPECT_EQ(f.F, 1);
  f = fit_fixed_point({100.0, -3.0}, 1e-3);
  EXPECT_EQ(f.I, 8);
  EXPECT_EQ(f.F, 0);
  f = fit_fixed_point({0.14, 0.21, 0.07}, 1e-3);
  EXPECT_EQ(f.F, 12);
  EXPECT_THROW(fit_fixed_point({0.1}, 0.0), CostModelError);
  EXPECT_THROW(fit_fixed_point({0.1}, -1.0), CostModelError);
}

TEST(FixedPoint, PowersOfTwo) {
  EXPECT_TRUE(all_powers_of_two({0.5, -0.25, 4.0, 0.0}));
  EXPECT_FALSE(all_powers_of_two({0.5, 0.3}));
  EXPECT_TRUE(all_powers_of_two({}));
}

}  // namespace
}  // namespace qrange
