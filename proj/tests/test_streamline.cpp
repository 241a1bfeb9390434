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
#include "qrange/streamline.hpp"
#include "test_util.hpp"

namespace qrange {
namespace {

std::size_t count_ops(const Graph& g, OpType op) {
  std::size_t n = 0;
  for (const auto& node : g.nodes()) n += node.op == op;
  return n;
}

// Every MatMul/Conv reads and writes pure integers.
void expect_integer_macs(const Graph& g, const RangeMap& ranges) {
  for (const auto& n : g.nodes()) {
    if (n.op != OpType::MatMul && n.op != OpType::Conv) continue;
    for (const std::string& t : {n.inputs[0], n.inputs[1], n.outputs[0]}) {
      const auto view = scaled_int_view(ranges.at(t));
      ASSERT_TRUE(view.has_value()) << n.name << " tensor " << t;
      EXPECT_TRUE(view->is_unit()) << n.name << " tensor " << t;
    }
  }
}

TEST(DuplicateSharedParams, SharedScaleFeedsTwoQuantizers) {
  Graph g;
  g.add_input("A", {2});
  g.add_input("B", {2});
  g.add_constant("s", NdArray::scalar(0.5));
  g.add_constant("z", NdArray::scalar(0.0));
  g.add_node({"qa", OpType::Quant, {"A", "s", "z"}, {"QA"}, QuantSpec{}});
  g.add_node({"qb", OpType::Quant, {"B", "s", "z"}, {"QB"}, QuantSpec{}});
  g.set_outputs({"QA", "QB"});
  const Graph d = duplicate_shared_params(g);
  for (const auto& t : d.tensors()) {
    if (t.is_constant()) EXPECT_EQ(d.consumers(t.name).size(), 1u) << t.name;
  }
  EXPECT_EQ(d.nodes()[0].inputs[1], "s");
  EXPECT_NE(d.nodes()[1].inputs[1], "s");
  EXPECT_EQ(*d.tensor(d.nodes()[1].inputs[1]).data, NdArray::scalar(0.5));
}

TEST(DuplicateSharedParams, NoSharingIsUnchanged) {
  const Graph g = worked_example_lowered();
  EXPECT_EQ(duplicate_shared_params(g), g);
}

TEST(DuplicateSharedParams, BranchingLinearOutputIsCloned) {
  Graph g;
  g.add_input("X", {2});
  g.add_constant("c", NdArray::scalar(3.0));
  g.add_node({"mul", OpType::Mul, {"X", "c"}, {"Y"}, {}});
  g.add_node({"r1", OpType::Relu, {"Y"}, {"A"}, {}});
  g.add_node({"r2", OpType::Relu, {"Y"}, {"B"}, {}});
  g.set_outputs({"A", "B"});
  const Graph d = duplicate_shared_params(g);
  EXPECT_EQ(count_ops(d, OpType::Mul), 2u);
  for (const auto& t : d.tensors()) {
    if (t.name == "X") continue;
    EXPECT_LE(d.consumers(t.name).size(), 1u) << t.name;
  }
  const TensorMap in{{"X", NdArray::vector({-1.0, 2.0})}};
  EXPECT_EQ(run(d, in), run(g, in));
}

TEST(MakeQuantizersExplicit, DynamicAndConstantQuantizers) {
  const Graph g = make_quantizers_explicit(worked_example_lowered());
  // The weight quantizer folds into integer codes times the scale.
  const Node* w = g.find_node("quant_w");
  ASSERT_NE(w, nullptr);
  EXPECT_EQ(w->op, OpType::Mul);
  EXPECT_EQ(*g.tensor(w->inputs[0]).data,
            NdArray({2, 3}, {-8, 7, -8, 7, 0, -8}));
  // The input quantizer becomes Div -> unit Quant -> Mul.
  const Node* q = g.find_node("quant_x");
  ASSERT_NE(q, nullptr);
  EXPECT_TRUE(is_unit_quant(g, *q));
  EXPECT_NE(g.find_node("quant_x_prescale"), nullptr);
  EXPECT_NE(g.find_node("quant_x_dequant"), nullptr);

  std::mt19937_64 rng(4);
  const Graph ref = worked_example_lowered();
  for (int i = 0; i < 200; ++i) {
    const auto in = testing::random_inputs(ref, rng, -6.0, 6.0);
    EXPECT_EQ(run(g, in).at("qy"), run(ref, in).at("qy"));
  }
}

TEST(SelectTargets, Policies) {
  const Graph g = worked_example_lowered();
  const auto act = select_targets(g, TargetPolicy::activation_feeding);
  ASSERT_EQ(act.size(), 1u);
  EXPECT_EQ(act[0].target_tensor, "bn_n");
  EXPECT_EQ(act[0].mac_node, "matmul");
  EXPECT_EQ(act[0].region_nodes,
            (std::vector<std::string>{"matmul", "add_b", "bn_mul", "bn_add"}));
  EXPECT_EQ(select_targets(g, TargetPolicy::latest)[0].target_tensor, "bn_n");
  EXPECT_EQ(select_targets(g, TargetPolicy::earliest)[0].target_tensor, "mm");
  EXPECT_EQ(parse_target_policy("latest"), TargetPolicy::latest);
  EXPECT_THROW(parse_target_policy("middle"), StreamlineError);
}

TEST(RemoveIdentityOps, DropsUnitMulAndZeroAdd) {
  Graph g;
  g.add_input("X", {2});
  g.add_constant("one", NdArray::scalar(1.0));
  g.add_constant("zero", NdArray::vector({0.0, 0.0}));
  g.add_node({"m", OpType::Mul, {"X", "one"}, {"A"}, {}});
  g.add_node({"r", OpType::Relu, {"A"}, {"B"}, {}});
  g.add_node({"a", OpType::Add, {"B", "zero"}, {"Y"}, {}});
  g.set_outputs({"Y"});
  const Graph out = remove_identity_ops(g);
  ASSERT_EQ(out.nodes().size(), 1u);
  EXPECT_EQ(out.nodes()[0].op, OpType::Relu);
  EXPECT_EQ(out.nodes()[0].inputs[0], "X");
  EXPECT_EQ(out.nodes()[0].outputs[0], "Y");
}

TEST(RemoveIdentityOps, KeepsBroadcastingIdentity) {
  Graph g;
  g.add_input("X", {2});
  g.add_constant("zero", NdArray({3, 1}, {0.0, 0.0, 0.0}));
  g.add_node({"a", OpType::Add, {"X", "zero"}, {"Y"}, {}});
  g.set_outputs({"Y"});
  EXPECT_EQ(remove_identity_ops(g).nodes().size(), 1u);
}

TEST(Streamline, WorkedExampleAggregatesIntoOneMulAdd) {
  const auto result =
      streamline(worked_example_graph(), worked_example_input_ranges());
  ASSERT_EQ(result.targets.size(), 1u);
  const auto& t = result.targets[0];
  EXPECT_EQ(t.tensor, "bn_n");
  const std::vector<double> scale{0.7 * 0.2 * 0.6, 0.7 * 0.3 * 0.2,
                                  0.7 * 0.1 * 0.4};
  const std::vector<double> bias{-3.3 * 0.6 - 0.2, -5.2 * 0.2 - 0.4,
                                 -6.1 * 0.4 + 1.1};
  const NdArray s = compact(t.scale), b = compact(t.bias);
  for (std::size_t c = 0; c < 3; ++c) {
    EXPECT_NEAR(s[c], scale[c], 1e-12);
    EXPECT_NEAR(b[c], bias[c], 1e-12);
  }
  const Graph& g = result.graph;
  EXPECT_EQ(count_ops(g, OpType::MatMul), 1u);
  EXPECT_EQ(count_ops(g, OpType::Gemm), 0u);
  EXPECT_EQ(count_ops(g, OpType::BatchNormalization), 0u);
  // Both quantizers become Div, unit Quant and dequantizing Mul around the
  // MatMul, the aggregated Mul and Add, and the Relu.
  EXPECT_EQ(g.nodes().size(), 9u);
  const RangeMap r = analyze(g, worked_example_input_ranges());
  expect_integer_macs(g, r);
  EXPECT_TRUE(r.at("bn_n").is_scaled_int());
  EXPECT_EQ(result.max_rel_deviation, 0.0);
}

TEST(Streamline, QuantizerScaleOnlyRegion) {
  Graph g;
  g.add_input("X", {1, 2});
  g.add_constant("s", NdArray::scalar(0.25));
  g.add_constant("z", NdArray::scalar(0.0));
  g.add_constant("W", NdArray({2, 2}, {1, -2, 3, 1}));
  g.add_node({"qx", OpType::Quant, {"X", "s", "z"}, {"QX"}, QuantSpec{4, true, false}});
  g.add_node({"mm", OpType::MatMul, {"QX", "W"}, {"Y"}, {}});
  g.add_node({"relu", OpType::Relu, {"Y"}, {"R"}, {}});
  g.set_outputs({"R"});
  const auto result = streamline(g, uniform_input_ranges(g, -1.0, 1.0));
  ASSERT_EQ(result.targets.size(), 1u);
  EXPECT_EQ(compact(result.targets[0].scale), NdArray::scalar(0.25));
  EXPECT_TRUE(all_equal_to(result.targets[0].bias, 0.0));
  EXPECT_EQ(count_ops(result.graph, OpType::Add), 0u);
  EXPECT_EQ(result.max_rel_deviation, 0.0);
}

TEST(Streamline, MacWithoutTargetIsAnError) {
  Graph g;
  g.add_input("X", {1, 2});
  g.add_constant("s", NdArray::scalar(0.25));
  g.add_constant("z", NdArray::scalar(0.0));
  g.add_constant("W", NdArray({2, 2}, {1, -2, 3, 1}));
  g.add_node({"qx", OpType::Quant, {"X", "s", "z"}, {"QX"}, QuantSpec{4, true, false}});
  g.add_node({"mm", OpType::MatMul, {"QX", "W"}, {"Y"}, {}});
  g.set_outputs({"Y"});
  EXPECT_THROW(streamline(g, uniform_input_ranges(g, -1.0, 1.0)),
               StreamlineError);
}

TEST(Streamline, Idempotent) {
  const auto once =
      streamline(worked_example_graph(), worked_example_input_ranges());
  const auto twice = streamline(once.graph, worked_example_input_ranges());
  EXPECT_EQ(twice.graph, once.graph);
  EXPECT_TRUE(twice.targets.empty());
}

TEST(Streamline, RandomMlpsPreserveFunctionAndRevealIntegers) {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 25; ++i) {
    const RangedGraph rg = random_mlp(rng);
    StreamlineOptions opts;
    opts.deviation_samples = 300;
    opts.seed = static_cast<uint64_t>(i);
    const auto result = streamline(rg.graph, rg.input_ranges, opts);
    EXPECT_LE(result.max_rel_deviation, 1e-6) << "graph " << i;
    const RangeMap r = analyze(result.graph, rg.input_ranges);
    expect_integer_macs(result.graph, r);
    EXPECT_EQ(streamline(result.graph, rg.input_ranges, opts).graph,
              result.graph)
        << "graph " << i;
  }
}

TEST(Streamline, RandomCnnsPreserveFunction) {
  std::mt19937_64 rng(22);
  for (int i = 0; i < 10; ++i) {
    const RangedGraph rg = random_cnn(rng);
    StreamlineOptions opts;
    opts.deviation_samples = 100;
    const auto result = streamline(rg.graph, rg.input_ranges, opts);
    EXPECT_LE(result.max_rel_deviation, 1e-6) << "graph " << i;
    const RangeMap r = analyze(result.graph, rg.input_ranges);
    expect_integer_macs(result.graph, r);
  }
}

TEST(Streamline, PowerOfTwoScalesAreExact) {
  Graph g;
  g.add_input("X", {1, 2});
  g.add_constant("s", NdArray::scalar(0.125));
  g.add_constant("z", NdArray::scalar(0.0));
  g.add_constant("W", NdArray({2, 2}, {1, -2, 3, 1}));
  g.add_constant("M", NdArray::vector({0.5, 2.0}));
  g.add_constant("B", NdArray::vector({0.25, -0.75}));
  g.add_constant("so", NdArray::scalar(0.5));
  g.add_node({"qx", OpType::Quant, {"X", "s", "z"}, {"QX"}, QuantSpec{6, true, false}});
  g.add_node({"mm", OpType::MatMul, {"QX", "W"}, {"Y"}, {}});
  g.add_node({"mul", OpType::Mul, {"Y", "M"}, {"YM"}, {}});
  g.add_node({"add", OpType::Add, {"YM", "B"}, {"YB"}, {}});
  g.add_node({"qo", OpType::Quant, {"YB", "so", "z"}, {"Q"}, QuantSpec{4, true, false}});
  g.set_outputs({"Q"});
  StreamlineOptions opts;
  opts.deviation_samples = 2000;
  const auto result = streamline(g, uniform_input_ranges(g, -3.0, 3.0), opts);
  EXPECT_EQ(result.max_rel_deviation, 0.0);
}

}  // namespace
}  // namespace qrange
