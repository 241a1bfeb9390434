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

#include "qrange/graph.hpp"

#include <algorithm>
#include <queue>
#include <set>
#include <unordered_set>

#include "qrange/error.hpp"

namespace qrange {
namespace {

struct OpName {
  OpType op;
  std::string_view name;
};

constexpr OpName kOpNames[] = {
    {OpType::Quant, "Quant"},
    {OpType::MatMul, "MatMul"},
    {OpType::Conv, "Conv"},
    {OpType::Add, "Add"},
    {OpType::Mul, "Mul"},
    {OpType::Div, "Div"},
    {OpType::Sub, "Sub"},
    {OpType::Relu, "Relu"},
    {OpType::Gemm, "Gemm"},
    {OpType::BatchNormalization, "BatchNormalization"},
    {OpType::MultiThreshold, "MultiThreshold"},
};

std::string quoted(std::string_view s) { return "'" + std::string(s) + "'"; }

}  // namespace

std::string_view to_string(OpType op) {
  for (const auto& entry : kOpNames) {
    if (entry.op == op) return entry.name;
  }
  return "?";
}

OpType parse_op(std::string_view name) {
  for (const auto& entry : kOpNames) {
    if (entry.name == name) return entry.op;
  }
  throw GraphError("unknown operator " + quoted(name));
}

std::pair<int, int> input_arity(OpType op) {
  switch (op) {
    case OpType::Quant:
      return {3, 3};
    case OpType::MatMul:
    case OpType::Add:
    case OpType::Mul:
    case OpType::Div:
    case OpType::Sub:
    case OpType::MultiThreshold:
      return {2, 2};
    case OpType::Conv:
    case OpType::Gemm:
      return {2, 3};
    case OpType::Relu:
      return {1, 1};
    case OpType::BatchNormalization:
      return {5, 5};
  }
  return {0, 0};
}

int64_t QuantSpec::qmin() const {
  if (!is_signed) return 0;
  const int64_t half = int64_t{1} << (bitwidth - 1);
  return narrow ? -half + 1 : -half;
}

int64_t QuantSpec::qmax() const {
  if (!is_signed) return (int64_t{1} << bitwidth) - 1;
  return (int64_t{1} << (bitwidth - 1)) - 1;
}

void QuantSpec::validate() const {
  if (bitwidth < 1 || bitwidth > 52) {
    throw GraphError("quantizer bitwidth " + std::to_string(bitwidth) +
                     " outside [1, 52]");
  }
  if (narrow && !is_signed) {
    throw GraphError("narrow quantization requires signed=true");
  }
}

// --- Graph construction -----------------------------------------------------

void Graph::add_tensor(TensorInfo info) {
  if (info.name.empty()) throw GraphError("tensor with empty name");
  if (tensor_index_.count(info.name)) {
    throw GraphError("duplicate tensor name " + quoted(info.name));
  }
  if (info.data && info.data->shape() != info.shape) {
    if (static_cast<int64_t>(info.data->size()) != num_elements(info.shape)) {
      throw GraphError("constant " + quoted(info.name) + " has " +
                       std::to_string(info.data->size()) +
                       " values but shape " + shape_to_string(info.shape));
    }
    info.data = info.data->reshaped(info.shape);
  }
  tensor_index_.emplace(info.name, tensors_.size());
  tensors_.push_back(std::move(info));
}

const TensorInfo& Graph::add_input(const std::string& name, Shape shape) {
  add_tensor({name, std::move(shape), std::nullopt});
  inputs_.push_back(name);
  return tensors_.back();
}

const TensorInfo& Graph::add_constant(const std::string& name, NdArray data) {
  Shape shape = data.shape();
  add_tensor({name, std::move(shape), std::move(data)});
  return tensors_.back();
}

const Node& Graph::add_node(Node node) {
  if (node.name.empty()) {
    node.name = unique_node_name(std::string(to_string(node.op)));
  }
  bool missing = false;
  for (const auto& out : node.outputs) missing |= !has_tensor(out);
  if (missing) {
    const auto shapes = infer_shapes(*this, node);
    for (std::size_t i = 0; i < node.outputs.size(); ++i) {
      if (!has_tensor(node.outputs[i])) {
        add_tensor({node.outputs[i], shapes.at(i), std::nullopt});
      }
    }
  }
  nodes_.push_back(std::move(node));
  return nodes_.back();
}

// --- queries ----------------------------------------------------------------

bool Graph::has_tensor(std::string_view name) const {
  return tensor_index_.count(std::string(name)) != 0;
}

const TensorInfo& Graph::tensor(std::string_view name) const {
  auto it = tensor_index_.find(std::string(name));
  if (it == tensor_index_.end()) {
    throw GraphError("unknown tensor " + quoted(name));
  }
  return tensors_[it->second];
}

TensorInfo& Graph::mutable_tensor(std::string_view name) {
  auto it = tensor_index_.find(std::string(name));
  if (it == tensor_index_.end()) {
    throw GraphError("unknown tensor " + quoted(name));
  }
  return tensors_[it->second];
}

bool Graph::is_constant(std::string_view name) const {
  return has_tensor(name) && tensor(name).is_constant();
}

bool Graph::is_graph_input(std::string_view name) const {
  return std::find(inputs_.begin(), inputs_.end(), name) != inputs_.end();
}

bool Graph::is_graph_output(std::string_view name) const {
  return std::find(outputs_.begin(), outputs_.end(), name) != outputs_.end();
}

std::optional<std::size_t> Graph::producer(std::string_view name) const {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& outs = nodes_[i].outputs;
    if (std::find(outs.begin(), outs.end(), name) != outs.end()) return i;
  }
  return std::nullopt;
}

std::vector<std::size_t> Graph::consumers(std::string_view name) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    for (const auto& in : nodes_[i].inputs) {
      if (in == name) out.push_back(i);
    }
  }
  return out;
}

const Node* Graph::find_node(std::string_view name) const {
  for (const auto& n : nodes_) {
    if (n.name == name) return &n;
  }
  return nullptr;
}

std::string Graph::unique_tensor_name(const std::string& base) const {
  if (!has_tensor(base)) return base;
  for (int i = 1;; ++i) {
    std::string candidate = base + "_" + std::to_string(i);
    if (!has_tensor(candidate)) return candidate;
  }
}

std::string Graph::unique_node_name(const std::string& base) const {
  if (!find_node(base)) return base;
  for (int i = 1;; ++i) {
    std::string candidate = base + "_" + std::to_string(i);
    if (!find_node(candidate)) return candidate;
  }
}

// --- editing ----------------------------------------------------------------

void Graph::reindex() {
  tensor_index_.clear();
  for (std::size_t i = 0; i < tensors_.size(); ++i) {
    tensor_index_.emplace(tensors_[i].name, i);
  }
}

void Graph::remove_tensor(std::string_view name) {
  auto it = std::find_if(tensors_.begin(), tensors_.end(),
                         [&](const TensorInfo& t) { return t.name == name; });
  if (it == tensors_.end()) return;
  tensors_.erase(it);
  reindex();
}

void Graph::replace_uses(std::string_view from, const std::string& to) {
  for (auto& node : nodes_) {
    for (auto& in : node.inputs) {
      if (in == from) in = to;
    }
  }
  for (auto& out : outputs_) {
    if (out == from) out = to;
  }
}

void Graph::remove_nodes(std::vector<std::size_t> indices) {
  std::sort(indices.begin(), indices.end());
  indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
  for (auto it = indices.rbegin(); it != indices.rend(); ++it) {
    nodes_.erase(nodes_.begin() + static_cast<std::ptrdiff_t>(*it));
  }
}

void Graph::prune_unused_tensors() {
  std::unordered_set<std::string> used(inputs_.begin(), inputs_.end());
  used.insert(outputs_.begin(), outputs_.end());
  for (const auto& node : nodes_) {
    used.insert(node.inputs.begin(), node.inputs.end());
    used.insert(node.outputs.begin(), node.outputs.end());
  }
  std::erase_if(tensors_,
                [&](const TensorInfo& t) { return !used.count(t.name); });
  reindex();
}

void Graph::sort_nodes() {
  const auto order = topo_sort(*this);
  std::vector<Node> sorted;
  sorted.reserve(nodes_.size());
  for (auto i : order) sorted.push_back(std::move(nodes_[i]));
  nodes_ = std::move(sorted);
}

bool Graph::operator==(const Graph& other) const {
  return tensors_ == other.tensors_ && nodes_ == other.nodes_ &&
         inputs_ == other.inputs_ && outputs_ == other.outputs_;
}

// --- validation -------------------------------------------------------------

namespace {

void check_attrs(const Node& node) {
  const std::string where = "node " + quoted(node.name) + " (" +
                            std::string(to_string(node.op)) + ")";
  switch (node.op) {
    case OpType::Quant:
      if (!std::holds_alternative<QuantSpec>(node.attrs)) {
        throw GraphError(where + " is missing quantizer attributes");
      }
      try {
        node.quant().validate();
      } catch (const GraphError& e) {
        throw GraphError(where + ": " + e.what());
      }
      break;
    case OpType::Conv:
      if (!std::holds_alternative<ConvAttrs>(node.attrs)) {
        throw GraphError(where + " is missing convolution attributes");
      }
      break;
    case OpType::BatchNormalization:
      if (!std::holds_alternative<BatchNormAttrs>(node.attrs)) {
        throw GraphError(where + " is missing batch-norm attributes");
      }
      break;
    case OpType::MultiThreshold: {
      if (!std::holds_alternative<MultiThresholdAttrs>(node.attrs)) {
        throw GraphError(where + " is missing multi-threshold attributes");
      }
      const auto& mt = node.multithreshold();
      if (mt.out_bits < 1 || mt.out_bits > 24) {
        throw GraphError(where + ": out_bits must lie in [1, 24]");
      }
      if (mt.bias.empty()) throw GraphError(where + ": empty bias");
      break;
    }
    default:
      if (!std::holds_alternative<std::monostate>(node.attrs)) {
        throw GraphError(where + " carries unexpected attributes");
      }
  }
}

}  // namespace

void Graph::validate() const {
  std::unordered_map<std::string, std::string> produced_by;
  for (const auto& name : inputs_) {
    if (!has_tensor(name)) {
      throw GraphError("graph input " + quoted(name) + " is not declared");
    }
    if (is_constant(name)) {
      throw GraphError("graph input " + quoted(name) + " is a constant");
    }
  }
  for (const auto& name : outputs_) {
    if (!has_tensor(name)) {
      throw GraphError("graph output " + quoted(name) + " is not declared");
    }
  }
  for (const auto& t : tensors_) {
    for (auto d : t.shape) {
      if (d <= 0) {
        throw GraphError("tensor " + quoted(t.name) +
                         " has non-positive dimension in shape " +
                         shape_to_string(t.shape));
      }
    }
  }
  std::set<std::string> node_names;
  for (const auto& node : nodes_) {
    if (!node_names.insert(node.name).second) {
      throw GraphError("duplicate node name " + quoted(node.name));
    }
    const auto [lo, hi] = input_arity(node.op);
    const int n_in = static_cast<int>(node.inputs.size());
    if (n_in < lo || n_in > hi) {
      throw GraphError("node " + quoted(node.name) + " (" +
                       std::string(to_string(node.op)) + ") expects " +
                       std::to_string(lo) +
                       (lo == hi ? "" : "-" + std::to_string(hi)) +
                       " inputs, got " + std::to_string(n_in));
    }
    if (node.outputs.size() != 1) {
      throw GraphError("node " + quoted(node.name) +
                       " must have exactly one output");
    }
    for (const auto& in : node.inputs) {
      if (!has_tensor(in)) {
        throw GraphError("node " + quoted(node.name) +
                         " references undefined tensor " + quoted(in));
      }
    }
    for (const auto& out : node.outputs) {
      if (!has_tensor(out)) {
        throw GraphError("node " + quoted(node.name) +
                         " references undefined tensor " + quoted(out));
      }
      if (is_constant(out) || is_graph_input(out)) {
        throw GraphError("node " + quoted(node.name) +
                         " writes to constant or graph input " + quoted(out));
      }
      auto [it, inserted] = produced_by.emplace(out, node.name);
      if (!inserted) {
        throw GraphError("tensor " + quoted(out) + " is produced by both " +
                         quoted(it->second) + " and " + quoted(node.name));
      }
    }
    check_attrs(node);
  }
  for (const auto& t : tensors_) {
    if (!t.is_constant() && !is_graph_input(t.name) &&
        !produced_by.count(t.name)) {
      throw GraphError("tensor " + quoted(t.name) +
                       " is neither a constant, a graph input, nor produced "
                       "by any node");
    }
  }
  const auto order = topo_sort(*this);
  for (auto idx : order) {
    const auto& node = nodes_[idx];
    std::vector<Shape> inferred;
    try {
      inferred = infer_shapes(*this, node);
    } catch (const ShapeError& e) {
      throw GraphError("node " + quoted(node.name) + ": " + e.what());
    }
    for (std::size_t i = 0; i < node.outputs.size(); ++i) {
      const auto& declared = tensor(node.outputs[i]).shape;
      if (declared != inferred[i]) {
        throw GraphError("node " + quoted(node.name) + " output " +
                         quoted(node.outputs[i]) + " declared with shape " +
                         shape_to_string(declared) + " but computes " +
                         shape_to_string(inferred[i]));
      }
    }
  }
}

std::vector<std::size_t> topo_sort(const Graph& g) {
  const auto& nodes = g.nodes();
  std::unordered_map<std::string, std::size_t> producer;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (const auto& out : nodes[i].outputs) producer.emplace(out, i);
  }
  std::vector<int> pending(nodes.size(), 0);
  std::vector<std::vector<std::size_t>> users(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (const auto& in : nodes[i].inputs) {
      auto it = producer.find(in);
      if (it != producer.end()) {
        ++pending[i];
        users[it->second].push_back(i);
      } else if (!g.is_constant(in) && !g.is_graph_input(in)) {
        throw GraphError("node " + quoted(nodes[i].name) +
                         " consumes tensor " + quoted(in) +
                         " that nothing produces");
      }
    }
  }
  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>>
      ready;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (pending[i] == 0) ready.push(i);
  }
  std::vector<std::size_t> order;
  order.reserve(nodes.size());
  while (!ready.empty()) {
    const auto i = ready.top();
    ready.pop();
    order.push_back(i);
    for (auto u : users[i]) {
      if (--pending[u] == 0) ready.push(u);
    }
  }
  if (order.size() != nodes.size()) {
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (pending[i] > 0) {
        throw GraphError("cycle detected involving node " +
                         quoted(nodes[i].name));
      }
    }
  }
  return order;
}

// --- shape inference --------------------------------------------------------

ConvGeometry conv_geometry(const Shape& input, const Shape& weights,
                           const ConvAttrs& attrs) {
  if (input.size() != 4 || weights.size() != 4) {
    throw ShapeError("Conv expects rank-4 input and weights, got " +
                     shape_to_string(input) + " and " +
                     shape_to_string(weights));
  }
  ConvGeometry g;
  g.batch = input[0];
  g.in_channels = input[1];
  g.in_h = input[2];
  g.in_w = input[3];
  g.out_channels = weights[0];
  g.kernel_h = weights[2];
  g.kernel_w = weights[3];
  g.group = attrs.group;
  if (g.group < 1 || g.in_channels % g.group || g.out_channels % g.group) {
    throw ShapeError("Conv group " + std::to_string(g.group) +
                     " does not divide channels");
  }
  if (weights[1] != g.in_channels / g.group) {
    throw ShapeError("Conv weights " + shape_to_string(weights) +
                     " do not match " + std::to_string(g.in_channels) +
                     " input channels in " + std::to_string(g.group) +
                     " groups");
  }
  if (!attrs.kernel.empty() &&
      (attrs.kernel.size() != 2 || attrs.kernel[0] != g.kernel_h ||
       attrs.kernel[1] != g.kernel_w)) {
    throw ShapeError("Conv kernel attribute disagrees with weight shape " +
                     shape_to_string(weights));
  }
  const auto& s = attrs.stride;
  if (s.size() == 1) {
    g.stride_h = g.stride_w = s[0];
  } else if (s.size() == 2) {
    g.stride_h = s[0];
    g.stride_w = s[1];
  } else {
    throw ShapeError("Conv stride must have 1 or 2 entries");
  }
  const auto& p = attrs.pad;
  if (p.size() == 1) {
    g.pad_top = g.pad_left = g.pad_bottom = g.pad_right = p[0];
  } else if (p.size() == 2) {
    g.pad_top = g.pad_bottom = p[0];
    g.pad_left = g.pad_right = p[1];
  } else if (p.size() == 4) {
    g.pad_top = p[0];
    g.pad_left = p[1];
    g.pad_bottom = p[2];
    g.pad_right = p[3];
  } else {
    throw ShapeError("Conv pad must have 1, 2 or 4 entries");
  }
  if (g.stride_h < 1 || g.stride_w < 1 || g.pad_top < 0 || g.pad_left < 0 ||
      g.pad_bottom < 0 || g.pad_right < 0) {
    throw ShapeError("Conv stride must be positive and pads non-negative");
  }
  const int64_t span_h = g.in_h + g.pad_top + g.pad_bottom - g.kernel_h;
  const int64_t span_w = g.in_w + g.pad_left + g.pad_right - g.kernel_w;
  if (span_h < 0 || span_w < 0) {
    throw ShapeError("Conv kernel larger than padded input");
  }
  g.out_h = span_h / g.stride_h + 1;
  g.out_w = span_w / g.stride_w + 1;
  return g;
}

std::vector<Shape> infer_shapes(const Graph& g, const Node& node) {
  auto in_shape = [&](std::size_t i) -> const Shape& {
    return g.tensor(node.inputs.at(i)).shape;
  };
  switch (node.op) {
    case OpType::Quant: {
      const Shape& x = in_shape(0);
      const Shape out = broadcast_shapes(
          broadcast_shapes(x, in_shape(1)), in_shape(2));
      if (out != x) {
        throw ShapeError("quantizer parameters " +
                         shape_to_string(in_shape(1)) +
                         " enlarge input shape " + shape_to_string(x));
      }
      return {out};
    }
    case OpType::Add:
    case OpType::Mul:
    case OpType::Div:
    case OpType::Sub:
      return {broadcast_shapes(in_shape(0), in_shape(1))};
    case OpType::Relu:
    case OpType::BatchNormalization:
    case OpType::MultiThreshold:
      return {in_shape(0)};
    case OpType::MatMul:
    case OpType::Gemm: {
      const Shape& a = in_shape(0);
      const Shape& b = in_shape(1);
      if (b.size() != 2 || a.empty()) {
        throw ShapeError(std::string(to_string(node.op)) +
                         " expects a rank-2 right operand and non-scalar left "
                         "operand, got " +
                         shape_to_string(a) + " x " + shape_to_string(b));
      }
      if (node.op == OpType::Gemm && a.size() != 2) {
        throw ShapeError("Gemm expects a rank-2 left operand");
      }
      if (a.back() != b[0]) {
        throw ShapeError("inner dimensions differ: " + shape_to_string(a) +
                         " x " + shape_to_string(b));
      }
      Shape out = a;
      out.back() = b[1];
      if (node.op == OpType::Gemm && node.inputs.size() == 3) {
        if (broadcast_shapes(out, in_shape(2)) != out) {
          throw ShapeError("Gemm bias " + shape_to_string(in_shape(2)) +
                           " does not broadcast to " + shape_to_string(out));
        }
      }
      return {out};
    }
    case OpType::Conv: {
      const auto geo = conv_geometry(in_shape(0), in_shape(1), node.conv());
      if (node.inputs.size() == 3 &&
          num_elements(in_shape(2)) != geo.out_channels) {
        throw ShapeError("Conv bias must have one value per output channel");
      }
      return {{geo.batch, geo.out_channels, geo.out_h, geo.out_w}};
    }
  }
  throw ShapeError("unsupported operator");
}

}  // namespace qrange
