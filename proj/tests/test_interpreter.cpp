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
#include "qrange/generators.hpp"
#include "qrange/graph_io.hpp"
#include "qrange/interpreter.hpp"
#include "qrange/lowering.hpp"
#include "test_util.hpp"

namespace qrange {
namespace {

Graph single_quant(double scale, double zero, QuantSpec spec) {
  Graph g;
  g.add_input("X", {3});
  g.add_constant("s", NdArray::scalar(scale));
  g.add_constant("z", NdArray::scalar(zero));
  g.add_node({"q", OpType::Quant, {"X", "s", "z"}, {"Y"}, spec});
  g.set_outputs({"Y"});
  return g;
}

TEST(Interpreter, QuantRoundsHalfToEven) {
  const Graph g = single_quant(0.7, 0.0, QuantSpec{4, true, false});
  const NdArray y =
      run(g, {{"X", NdArray::vector({0.35, 1.05, -0.35})}}).at("Y");
  EXPECT_DOUBLE_EQ(y[0], 0.0);
  EXPECT_NEAR(y[1], 1.4, 1e-12);
  EXPECT_DOUBLE_EQ(y[2], 0.0);
}

TEST(Interpreter, QuantClampsAndHonorsZeroPoint) {
  const Graph g = single_quant(0.5, 2.0, QuantSpec{3, false, false});
  const NdArray y =
      run(g, {{"X", NdArray::vector({-5.0, 0.0, 100.0})}}).at("Y");
  EXPECT_DOUBLE_EQ(y[0], -1.0);  // code 0 -> (0 - 2) * 0.5
  EXPECT_DOUBLE_EQ(y[1], 0.0);
  EXPECT_DOUBLE_EQ(y[2], 2.5);  // code 7 -> (7 - 2) * 0.5
}

TEST(Interpreter, MultiThresholdCounts) {
  Graph g;
  g.add_input("X", {1, 2});
  g.add_constant("T", NdArray({2, 3}, {0, 1, 2, -5, 5, 5}));
  MultiThresholdAttrs attrs;
  attrs.bias = {-1.0};
  attrs.out_bits = 2;
  g.add_node({"mt", OpType::MultiThreshold, {"X", "T"}, {"Y"}, attrs});
  g.set_outputs({"Y"});
  const NdArray y = run(g, {{"X", NdArray({1, 2}, {1.0, 0.0})}}).at("Y");
  EXPECT_DOUBLE_EQ(y[0], 1.0);
  EXPECT_DOUBLE_EQ(y[1], 0.0);
}

TEST(Interpreter, MissingInputIsAnError) {
  const Graph g = single_quant(0.5, 0.0, QuantSpec{});
  EXPECT_THROW(run(g, {}), Error);
}

TEST(Interpreter, RunAllKeepsIntermediates) {
  const Graph g = worked_example_lowered();
  std::mt19937_64 rng(1);
  const TensorMap all = run_all(g, testing::random_inputs(g, rng, -1, 1));
  for (const char* t : {"mm", "mm_b", "bn_m", "bn_n", "r", "qy"}) {
    EXPECT_TRUE(all.count(t)) << t;
  }
}

TEST(Verify, DeterministicForSeed) {
  const Graph g = worked_example_lowered();
  const RangeMap r = analyze(g, worked_example_input_ranges());
  const VerifyReport a = verify_ranges(g, r, 200, 17);
  const VerifyReport b = verify_ranges(g, r, 200, 17);
  ASSERT_EQ(a.trace.observed.size(), b.trace.observed.size());
  for (const auto& [name, obs] : a.trace.observed) {
    EXPECT_EQ(obs.lo(), b.trace.observed.at(name).lo()) << name;
    EXPECT_EQ(obs.hi(), b.trace.observed.at(name).hi()) << name;
  }
}

TEST(Verify, WorkedExampleHasNoViolations) {
  const Graph g = load_graph(testing::sample_path("fig7.json"));
  const RangeMap r = analyze(g, worked_example_input_ranges());
  const VerifyReport rep = verify_ranges(g, r, 10000, 3);
  EXPECT_TRUE(rep.ok()) << rep.violation_count;
  EXPECT_EQ(rep.samples, 10000u);
  EXPECT_GE(rep.slack.at("mm").max_slack, 0.0);
}

TEST(Verify, PointInputHasZeroSlack) {
  Graph g;
  g.add_input("X", {1, 2});
  g.add_constant("c", NdArray::vector({2.0, -3.0}));
  g.add_node({"mul", OpType::Mul, {"X", "c"}, {"Y"}, {}});
  g.add_node({"relu", OpType::Relu, {"Y"}, {"Z"}, {}});
  g.set_outputs({"Z"});
  const RangeMap r = analyze(g, uniform_input_ranges(g, 1.5, 1.5));
  const VerifyReport rep = verify_ranges(g, r, 20, 0);
  EXPECT_TRUE(rep.ok());
  for (const auto& [name, s] : rep.slack) EXPECT_EQ(s.max_slack, 0.0) << name;
  EXPECT_EQ(rep.stuck_channels.at("Z"), (std::vector<int64_t>{0, 1}));
}

TEST(Verify, DetectsUnsoundRanges) {
  Graph g;
  g.add_input("X", {2});
  g.add_node({"relu", OpType::Relu, {"X"}, {"Y"}, {}});
  g.set_outputs({"Y"});
  RangeMap r = analyze(g, uniform_input_ranges(g, -1, 1));
  r.at("Y") = ScaledIntRange::from_interval(Interval(NdArray::vector({0, 0}),
                                      NdArray::vector({0.5, 0.5})));
  const VerifyReport rep = verify_ranges(g, r, 500, 2);
  EXPECT_FALSE(rep.ok());
  EXPECT_EQ(rep.violations.at(0).tensor, "Y");
}

TEST(Verify, RandomGraphsAreSound) {
  std::mt19937_64 rng(77);
  for (int i = 0; i < 5; ++i) {
    const RangedGraph rg = random_mlp(rng);
    const Graph g = lower(rg.graph);
    const RangeMap r = analyze(g, rg.input_ranges);
    EXPECT_TRUE(verify_ranges(g, r, 500, i).ok()) << "graph " << i;
  }
}

}  // namespace
}  // namespace qrange
