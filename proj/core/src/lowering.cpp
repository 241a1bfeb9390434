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

#include "qrange/lowering.hpp"

#include <cmath>
#include <set>

#include "qrange/error.hpp"

namespace qrange {
namespace {

class Namer {
 public:
  explicit Namer(const Graph& g) {
    for (const auto& n : g.nodes()) used_.insert(n.name);
  }
  std::string operator()(const std::string& base) {
    std::string candidate = base;
    for (int i = 1; used_.count(candidate); ++i) {
      candidate = base + "_" + std::to_string(i);
    }
    used_.insert(candidate);
    return candidate;
  }

 private:
  std::set<std::string> used_;
};

const NdArray& constant_data(const Graph& g, const Node& node,
                             std::size_t input, const char* what) {
  const auto& name = node.inputs.at(input);
  if (!g.is_constant(name)) {
    throw GraphError(std::string(to_string(node.op)) + " node '" + node.name +
                     "' has dynamic " + what + " '" + name + "'");
  }
  return *g.tensor(name).data;
}

// Shape that lines a per-channel vector up with axis 1 of a tensor of the
// given rank.
Shape channel_param_shape(int64_t channels, std::size_t rank) {
  if (rank < 2) return {channels};
  Shape s(rank - 1, 1);
  s[0] = channels;
  return s;
}

bool feeds_unit_quant(const Graph& g, const std::string& tensor, int depth) {
  const auto users = g.consumers(tensor);
  if (users.empty() || g.is_graph_output(tensor)) return false;
  for (auto u : users) {
    const Node& n = g.nodes()[u];
    if (is_unit_quant(g, n) && n.inputs[0] == tensor) continue;
    if (depth == 0 && n.op == OpType::Add && n.inputs[0] == tensor &&
        g.is_constant(n.inputs[1]) &&
        feeds_unit_quant(g, n.outputs[0], depth + 1)) {
      continue;
    }
    return false;
  }
  return true;
}

}  // namespace

bool is_unit_quant(const Graph& g, const Node& node) {
  if (node.op != OpType::Quant) return false;
  const auto& s = node.inputs[1];
  const auto& z = node.inputs[2];
  return g.is_constant(s) && g.is_constant(z) &&
         all_equal_to(*g.tensor(s).data, 1.0) &&
         all_equal_to(*g.tensor(z).data, 0.0);
}

Graph lower(const Graph& g) {
  Graph out = g;
  Namer names(g);
  std::vector<Node> nodes;
  auto add_const = [&](const std::string& base, NdArray data) {
    const std::string name = out.unique_tensor_name(base);
    out.add_constant(name, std::move(data));
    return name;
  };
  auto add_intermediate = [&](const std::string& base, const Shape& shape) {
    const std::string name = out.unique_tensor_name(base);
    out.add_tensor({name, shape, std::nullopt});
    return name;
  };
  for (const Node& node : g.nodes()) {
    const std::string& y = node.outputs[0];
    const Shape& y_shape = g.tensor(y).shape;
    switch (node.op) {
      case OpType::Gemm: {
        if (node.inputs.size() == 2) {
          nodes.push_back({node.name, OpType::MatMul, node.inputs, {y}, {}});
          break;
        }
        const std::string mm = add_intermediate(y + "_matmul", y_shape);
        nodes.push_back({node.name, OpType::MatMul,
                         {node.inputs[0], node.inputs[1]}, {mm}, {}});
        nodes.push_back({names(node.name + "_bias"), OpType::Add,
                         {mm, node.inputs[2]}, {y}, {}});
        break;
      }
      case OpType::BatchNormalization: {
        const NdArray& gamma = constant_data(g, node, 1, "scale");
        const NdArray& beta = constant_data(g, node, 2, "bias");
        const NdArray& mean = constant_data(g, node, 3, "mean");
        const NdArray& var = constant_data(g, node, 4, "variance");
        const double eps = node.batchnorm().epsilon;
        const Shape& x_shape = g.tensor(node.inputs[0]).shape;
        const int64_t c = x_shape.empty() ? 1 : x_shape[channel_axis(x_shape)];
        for (const NdArray* p : {&gamma, &beta, &mean, &var}) {
          if (static_cast<int64_t>(p->size()) != c) {
            throw GraphError("BatchNormalization '" + node.name +
                             "' parameters must have one value per channel");
          }
        }
        std::vector<double> m(static_cast<std::size_t>(c));
        std::vector<double> n(m.size());
        for (std::size_t i = 0; i < m.size(); ++i) {
          m[i] = gamma[i] / std::sqrt(var[i] + eps);
          n[i] = beta[i] - m[i] * mean[i];
        }
        const Shape ps = channel_param_shape(c, x_shape.size());
        const std::string mul_c = add_const(node.name + "_mul", NdArray(ps, m));
        const std::string add_c = add_const(node.name + "_add", NdArray(ps, n));
        const std::string mid = add_intermediate(y + "_mul", y_shape);
        nodes.push_back({node.name, OpType::Mul, {node.inputs[0], mul_c}, {mid}, {}});
        nodes.push_back({names(node.name + "_shift"), OpType::Add, {mid, add_c},
                         {y}, {}});
        break;
      }
      case OpType::Conv: {
        if (node.inputs.size() == 2) {
          nodes.push_back(node);
          break;
        }
        const NdArray& b = constant_data(g, node, 2, "bias");
        const std::string bias_c = add_const(
            node.inputs[2] + "_lowered",
            b.reshaped(channel_param_shape(static_cast<int64_t>(b.size()), 4)));
        const std::string mid = add_intermediate(y + "_conv", y_shape);
        Node conv = node;
        conv.inputs.pop_back();
        conv.outputs = {mid};
        nodes.push_back(std::move(conv));
        nodes.push_back({names(node.name + "_bias"), OpType::Add, {mid, bias_c},
                         {y}, {}});
        break;
      }
      case OpType::Div: {
        const NdArray& c = constant_data(g, node, 1, "divisor");
        if (feeds_unit_quant(g, y, 0)) {
          nodes.push_back(node);
          break;
        }
        for (double v : c.values()) {
          if (v == 0.0) {
            throw GraphError("Div node '" + node.name + "' divides by zero");
          }
        }
        const std::string recip = add_const(
            node.inputs[1] + "_recip", map(c, [](double v) { return 1.0 / v; }));
        nodes.push_back({node.name, OpType::Mul, {node.inputs[0], recip}, {y}, {}});
        break;
      }
      default:
        nodes.push_back(node);
    }
  }
  out.mutable_nodes() = std::move(nodes);
  out.prune_unused_tensors();
  out.validate();
  return out;
}

}  // namespace qrange
