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

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "qrange/ndarray.hpp"

namespace qrange {

enum class OpType {
  Quant,
  MatMul,
  Conv,
  Add,
  Mul,
  Div,
  Sub,
  Relu,
  Gemm,
  BatchNormalization,
  MultiThreshold,
};

std::string_view to_string(OpType op);
/// Throws GraphError for names outside the supported operator set.
OpType parse_op(std::string_view name);

/// Integer clipping bounds of a quantizer.
struct QuantSpec {
  int bitwidth = 8;
  bool is_signed = true;
  bool narrow = false;

  int64_t qmin() const;
  int64_t qmax() const;
  void validate() const;

  bool operator==(const QuantSpec&) const = default;
};

struct ConvAttrs {
  std::vector<int64_t> kernel;           // optional; derived from weights
  std::vector<int64_t> stride{1, 1};
  std::vector<int64_t> pad{0, 0, 0, 0};  // top, left, bottom, right
  int64_t group = 1;

  bool operator==(const ConvAttrs&) const = default;
};

struct BatchNormAttrs {
  double epsilon = 1e-5;
  bool operator==(const BatchNormAttrs&) const = default;
};

struct MultiThresholdAttrs {
  std::vector<double> bias{0.0};  // one entry, or one per channel
  int out_bits = 1;

  bool operator==(const MultiThresholdAttrs&) const = default;
};

using NodeAttrs = std::variant<std::monostate, QuantSpec, ConvAttrs,
                               BatchNormAttrs, MultiThresholdAttrs>;

struct Node {
  std::string name;
  OpType op = OpType::Add;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  NodeAttrs attrs;

  const QuantSpec& quant() const { return std::get<QuantSpec>(attrs); }
  const ConvAttrs& conv() const { return std::get<ConvAttrs>(attrs); }
  const BatchNormAttrs& batchnorm() const {
    return std::get<BatchNormAttrs>(attrs);
  }
  const MultiThresholdAttrs& multithreshold() const {
    return std::get<MultiThresholdAttrs>(attrs);
  }

  bool operator==(const Node&) const = default;
};

struct TensorInfo {
  std::string name;
  Shape shape;
  std::optional<NdArray> data;  // present iff the tensor is a constant

  bool is_constant() const { return data.has_value(); }
  bool operator==(const TensorInfo&) const = default;
};

/// Named-tensor dataflow DAG. Passes treat graphs as values: they copy, edit
/// their copy and return it.
class Graph {
 public:
  Graph() = default;

  // --- construction -------------------------------------------------------
  void add_tensor(TensorInfo info);
  const TensorInfo& add_input(const std::string& name, Shape shape);
  const TensorInfo& add_constant(const std::string& name, NdArray data);
  /// Appends a node; output tensors not yet declared are created with
  /// inferred shapes.
  const Node& add_node(Node node);
  void set_inputs(std::vector<std::string> names) { inputs_ = std::move(names); }
  void set_outputs(std::vector<std::string> names) {
    outputs_ = std::move(names);
  }
  void add_output(const std::string& name) { outputs_.push_back(name); }

  // --- queries ------------------------------------------------------------
  const std::vector<TensorInfo>& tensors() const { return tensors_; }
  const std::vector<Node>& nodes() const { return nodes_; }
  std::vector<Node>& mutable_nodes() { return nodes_; }
  const std::vector<std::string>& inputs() const { return inputs_; }
  const std::vector<std::string>& outputs() const { return outputs_; }

  bool has_tensor(std::string_view name) const;
  const TensorInfo& tensor(std::string_view name) const;
  TensorInfo& mutable_tensor(std::string_view name);
  bool is_constant(std::string_view name) const;
  bool is_graph_input(std::string_view name) const;
  bool is_graph_output(std::string_view name) const;

  /// Index of the node producing `name`, if any.
  std::optional<std::size_t> producer(std::string_view name) const;
  /// Indices of nodes consuming `name`, in node-list order (a node consuming
  /// the tensor twice appears twice).
  std::vector<std::size_t> consumers(std::string_view name) const;
  const Node* find_node(std::string_view name) const;

  /// A tensor name not yet used in the graph, derived from `base`.
  std::string unique_tensor_name(const std::string& base) const;
  std::string unique_node_name(const std::string& base) const;

  // --- editing ------------------------------------------------------------
  void remove_tensor(std::string_view name);
  /// Replaces every use of `from` as a node input or graph output by `to`.
  void replace_uses(std::string_view from, const std::string& to);
  /// Drops nodes by index (indices refer to the current node list).
  void remove_nodes(std::vector<std::size_t> indices);
  /// Removes constants and intermediate tensors no node or output refers to.
  void prune_unused_tensors();
  /// Reorders the node list topologically (stable).
  void sort_nodes();

  /// Checks every structural invariant; throws GraphError naming the
  /// offending node or tensor.
  void validate() const;

  bool operator==(const Graph& other) const;

 private:
  void reindex();

  std::vector<TensorInfo> tensors_;
  std::unordered_map<std::string, std::size_t> tensor_index_;
  std::vector<Node> nodes_;
  std::vector<std::string> inputs_;
  std::vector<std::string> outputs_;
};

/// Node indices ordered so every node follows the producers of its inputs.
/// Among independent nodes the original list order is kept. Throws
/// GraphError on cycles.
std::vector<std::size_t> topo_sort(const Graph& g);

/// Output shapes of `node` given the graph's declared input shapes.
std::vector<Shape> infer_shapes(const Graph& g, const Node& node);

/// Resolved Conv geometry (pads normalized, kernel taken from weights).
struct ConvGeometry {
  int64_t batch = 1, in_channels = 0, in_h = 0, in_w = 0;
  int64_t out_channels = 0, kernel_h = 0, kernel_w = 0;
  int64_t stride_h = 1, stride_w = 1;
  int64_t pad_top = 0, pad_left = 0, pad_bottom = 0, pad_right = 0;
  int64_t group = 1;
  int64_t out_h = 0, out_w = 0;

  int64_t in_per_group() const { return in_channels / group; }
  int64_t out_per_group() const { return out_channels / group; }
  bool depthwise() const { return group > 1 && group == in_channels; }
  bool has_padding() const {
    return pad_top || pad_left || pad_bottom || pad_right;
  }
};

ConvGeometry conv_geometry(const Shape& input, const Shape& weights,
                           const ConvAttrs& attrs);

/// Numbers of inputs accepted by each operator.
std::pair<int, int> input_arity(OpType op);

}  // namespace qrange
