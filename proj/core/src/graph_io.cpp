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

#include "qrange/graph_io.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "qrange/error.hpp"

namespace qrange {

using nlohmann::json;

namespace {

void flatten(const json& value, std::size_t depth, Shape& shape,
             std::vector<double>& out, const std::string& what) {
  if (value.is_number()) {
    if (depth != shape.size()) {
      throw GraphError(what + ": ragged nested array");
    }
    out.push_back(value.get<double>());
    return;
  }
  if (!value.is_array()) {
    throw GraphError(what + ": array elements must be numbers");
  }
  const auto n = static_cast<int64_t>(value.size());
  if (depth == shape.size()) {
    if (!out.empty()) throw GraphError(what + ": ragged nested array");
    shape.push_back(n);
  } else if (shape[depth] != n) {
    throw GraphError(what + ": ragged nested array");
  }
  for (const auto& v : value) flatten(v, depth + 1, shape, out, what);
}

const json& require(const json& obj, const char* key, const std::string& what) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw GraphError(what + " is missing required key '" + key + "'");
  }
  return *it;
}

std::vector<std::string> string_list(const json& value,
                                     const std::string& what) {
  if (!value.is_array()) throw GraphError(what + " must be a list of names");
  std::vector<std::string> out;
  for (const auto& v : value) {
    if (!v.is_string()) throw GraphError(what + " must be a list of names");
    out.push_back(v.get<std::string>());
  }
  return out;
}

std::vector<int64_t> int_list(const json& value, const std::string& what) {
  if (value.is_number_integer()) return {value.get<int64_t>()};
  if (!value.is_array()) throw GraphError(what + " must be an integer list");
  std::vector<int64_t> out;
  for (const auto& v : value) {
    if (!v.is_number_integer()) {
      throw GraphError(what + " must be an integer list");
    }
    out.push_back(v.get<int64_t>());
  }
  return out;
}

void check_keys(const json& obj, std::initializer_list<const char*> allowed,
                const std::string& what) {
  if (!obj.is_object()) throw GraphError(what + " must be an object");
  for (const auto& item : obj.items()) {
    bool ok = false;
    for (const char* key : allowed) ok |= item.key() == key;
    if (!ok) {
      throw GraphError(what + " has unknown key '" + item.key() + "'");
    }
  }
}

NodeAttrs parse_attrs(OpType op, const json& attrs, const std::string& what) {
  const std::string where = what + " attrs";
  switch (op) {
    case OpType::Quant: {
      check_keys(attrs, {"bitwidth", "signed", "narrow"}, where);
      QuantSpec q;
      q.bitwidth = require(attrs, "bitwidth", where).get<int>();
      q.is_signed = attrs.value("signed", true);
      q.narrow = attrs.value("narrow", false);
      return q;
    }
    case OpType::Conv: {
      check_keys(attrs, {"kernel", "stride", "pad", "group"}, where);
      ConvAttrs c;
      if (attrs.contains("kernel")) {
        c.kernel = int_list(attrs["kernel"], where + " kernel");
        if (c.kernel.size() == 1) c.kernel.push_back(c.kernel[0]);
      }
      if (attrs.contains("stride")) {
        c.stride = int_list(attrs["stride"], where + " stride");
        if (c.stride.size() == 1) c.stride.push_back(c.stride[0]);
      }
      if (attrs.contains("pad")) {
        auto p = int_list(attrs["pad"], where + " pad");
        if (p.size() == 1) {
          c.pad = {p[0], p[0], p[0], p[0]};
        } else if (p.size() == 2) {
          c.pad = {p[0], p[1], p[0], p[1]};
        } else {
          c.pad = std::move(p);
        }
      }
      c.group = attrs.value("group", int64_t{1});
      return c;
    }
    case OpType::BatchNormalization: {
      check_keys(attrs, {"epsilon"}, where);
      BatchNormAttrs b;
      b.epsilon = attrs.value("epsilon", 1e-5);
      return b;
    }
    case OpType::MultiThreshold: {
      check_keys(attrs, {"bias", "out_bits", "sorted"}, where);
      MultiThresholdAttrs m;
      if (attrs.contains("bias")) {
        const auto& b = attrs["bias"];
        if (b.is_number()) {
          m.bias = {b.get<double>()};
        } else {
          m.bias = b.get<std::vector<double>>();
        }
      }
      m.out_bits = require(attrs, "out_bits", where).get<int>();
      if (attrs.contains("sorted") && !attrs["sorted"].get<bool>()) {
        throw GraphError(where + ": unsorted threshold tables are not "
                                 "supported");
      }
      return m;
    }
    default:
      if (!attrs.empty()) {
        throw GraphError(where + ": operator takes no attributes");
      }
      return std::monostate{};
  }
}

json attrs_to_json(const Node& node) {
  return std::visit(
      [](const auto& a) -> json {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, QuantSpec>) {
          return {{"bitwidth", a.bitwidth},
                  {"signed", a.is_signed},
                  {"narrow", a.narrow}};
        } else if constexpr (std::is_same_v<T, ConvAttrs>) {
          json j = {{"stride", a.stride}, {"pad", a.pad}, {"group", a.group}};
          if (!a.kernel.empty()) j["kernel"] = a.kernel;
          return j;
        } else if constexpr (std::is_same_v<T, BatchNormAttrs>) {
          return {{"epsilon", a.epsilon}};
        } else if constexpr (std::is_same_v<T, MultiThresholdAttrs>) {
          return {{"bias", a.bias}, {"out_bits", a.out_bits}};
        } else {
          return json::object();
        }
      },
      node.attrs);
}

}  // namespace

NdArray array_from_json(const json& value, const std::string& what) {
  if (value.is_object()) {
    check_keys(value, {"shape", "data"}, what);
    const Shape shape = int_list(require(value, "shape", what), what + " shape");
    Shape ignored;
    std::vector<double> data;
    const auto& d = require(value, "data", what);
    if (d.is_number()) {
      data.push_back(d.get<double>());
    } else {
      flatten(d, 0, ignored, data, what);
    }
    if (data.size() == 1 && num_elements(shape) != 1) {
      return NdArray::full(shape, data[0]);
    }
    if (static_cast<int64_t>(data.size()) != num_elements(shape)) {
      throw GraphError(what + ": " + std::to_string(data.size()) +
                       " values do not fill shape " + shape_to_string(shape));
    }
    return NdArray(shape, std::move(data));
  }
  if (value.is_number()) return NdArray::scalar(value.get<double>());
  Shape shape;
  std::vector<double> data;
  flatten(value, 0, shape, data, what);
  return NdArray(shape, std::move(data));
}

json array_to_json(const NdArray& a) {
  if (a.rank() == 0) return a[0];
  if (a.rank() == 1) return a.values();
  return {{"shape", a.shape()}, {"data", a.values()}};
}

Graph graph_from_json(const json& doc) {
  if (!doc.is_object()) throw GraphError("graph document must be an object");
  check_keys(doc, {"tensors", "nodes", "inputs", "outputs", "name"}, "graph");
  Graph g;
  const auto& tensors = require(doc, "tensors", "graph");
  if (!tensors.is_array()) throw GraphError("'tensors' must be a list");
  for (const auto& t : tensors) {
    const std::string what =
        "tensor " + (t.is_object() && t.contains("name") && t["name"].is_string()
                         ? "'" + t["name"].get<std::string>() + "'"
                         : std::string("<unnamed>"));
    check_keys(t, {"name", "shape", "constant", "data"}, what);
    TensorInfo info;
    info.name = require(t, "name", what).get<std::string>();
    info.shape = int_list(require(t, "shape", what), what + " shape");
    if (t["shape"].is_number_integer()) info.shape = {info.shape[0]};
    const bool constant = t.value("constant", t.contains("data"));
    if (constant) {
      if (!t.contains("data")) throw GraphError(what + " is constant without data");
      Shape ignored;
      std::vector<double> data;
      const auto& d = t["data"];
      if (d.is_number()) {
        data.push_back(d.get<double>());
      } else {
        flatten(d, 0, ignored, data, what + " data");
      }
      if (static_cast<int64_t>(data.size()) != num_elements(info.shape)) {
        throw GraphError(what + " has " + std::to_string(data.size()) +
                         " values but shape " + shape_to_string(info.shape));
      }
      info.data = NdArray(info.shape, std::move(data));
    } else if (t.contains("data")) {
      throw GraphError(what + " carries data but is not constant");
    }
    g.add_tensor(std::move(info));
  }
  const auto& nodes = require(doc, "nodes", "graph");
  if (!nodes.is_array()) throw GraphError("'nodes' must be a list");
  std::set<std::string> names;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& n = nodes[i];
    std::string what = "node #" + std::to_string(i);
    check_keys(n, {"op", "name", "inputs", "outputs", "attrs"}, what);
    Node node;
    if (n.contains("name")) {
      node.name = n["name"].get<std::string>();
      what = "node '" + node.name + "'";
    }
    node.op = parse_op(require(n, "op", what).get<std::string>());
    node.inputs = string_list(require(n, "inputs", what), what + " inputs");
    node.outputs = string_list(require(n, "outputs", what), what + " outputs");
    node.attrs = parse_attrs(node.op, n.value("attrs", json::object()), what);
    if (node.name.empty()) {
      const std::string base = std::string(to_string(node.op));
      std::string candidate = base;
      for (int k = 1; names.count(candidate); ++k) {
        candidate = base + "_" + std::to_string(k);
      }
      node.name = candidate;
    }
    names.insert(node.name);
    for (const auto& t : node.inputs) {
      if (!g.has_tensor(t)) {
        throw GraphError(what + " references undefined tensor '" + t + "'");
      }
    }
    for (const auto& t : node.outputs) {
      if (!g.has_tensor(t)) {
        throw GraphError(what + " references undefined tensor '" + t + "'");
      }
    }
    g.mutable_nodes().push_back(std::move(node));
  }
  g.set_inputs(string_list(require(doc, "inputs", "graph"), "graph inputs"));
  g.set_outputs(string_list(require(doc, "outputs", "graph"), "graph outputs"));
  g.validate();
  return g;
}

Graph parse_graph(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw GraphError(std::string("malformed graph document: ") + e.what());
  }
  try {
    return graph_from_json(doc);
  } catch (const json::exception& e) {
    throw GraphError(std::string("graph schema violation: ") + e.what());
  }
}

json graph_to_json(const Graph& g) {
  json tensors = json::array();
  for (const auto& t : g.tensors()) {
    json j = {{"name", t.name}, {"shape", t.shape},
              {"constant", t.is_constant()}};
    if (t.data) j["data"] = t.data->values();
    tensors.push_back(std::move(j));
  }
  json nodes = json::array();
  for (const auto& n : g.nodes()) {
    nodes.push_back({{"op", std::string(to_string(n.op))},
                     {"name", n.name},
                     {"inputs", n.inputs},
                     {"outputs", n.outputs},
                     {"attrs", attrs_to_json(n)}});
  }
  return {{"tensors", tensors},
          {"nodes", nodes},
          {"inputs", g.inputs()},
          {"outputs", g.outputs()}};
}

std::string serialize_graph(const Graph& g) {
  return graph_to_json(g).dump(2) + "\n";
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read file '" + path.string() + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text_file(const std::filesystem::path& path,
                     const std::string& text) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path);
  if (!out) throw Error("cannot write file '" + path.string() + "'");
  out << text;
  if (!out) throw Error("failed writing file '" + path.string() + "'");
}

Graph load_graph(const std::filesystem::path& path) {
  return parse_graph(read_text_file(path));
}

void save_graph(const Graph& g, const std::filesystem::path& path) {
  write_text_file(path, serialize_graph(g));
}

}  // namespace qrange
