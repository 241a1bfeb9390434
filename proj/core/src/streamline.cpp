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

#include "qrange/streamline.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "qrange/error.hpp"
#include "qrange/interpreter.hpp"
#include "qrange/log.hpp"
#include "qrange/lowering.hpp"
#include "qrange/scalar_ops.hpp"

namespace qrange {
namespace {

// Index of the data input of an elementwise node with a constant operand,
// or -1 if the node is not of that form.
int linear_data_input(const Graph& g, const Node& n) {
  switch (n.op) {
    case OpType::Add:
    case OpType::Mul:
      if (g.is_constant(n.inputs[1])) return 0;
      if (g.is_constant(n.inputs[0])) return 1;
      return -1;
    case OpType::Sub:
    case OpType::Div:
      return g.is_constant(n.inputs[1]) ? 0 : -1;
    default:
      return -1;
  }
}

bool is_mac(const Node& n) {
  return n.op == OpType::MatMul || n.op == OpType::Conv;
}

int identity_data_input(const Graph& g, const Node& n) {
  auto is = [&](const std::string& t, double v) {
    return g.is_constant(t) && all_equal_to(*g.tensor(t).data, v);
  };
  switch (n.op) {
    case OpType::Mul:
      if (is(n.inputs[1], 1.0)) return 0;
      if (is(n.inputs[0], 1.0)) return 1;
      return -1;
    case OpType::Add:
      if (is(n.inputs[1], 0.0)) return 0;
      if (is(n.inputs[0], 0.0)) return 1;
      return -1;
    case OpType::Sub:
      return is(n.inputs[1], 0.0) ? 0 : -1;
    case OpType::Div:
      return is(n.inputs[1], 1.0) ? 0 : -1;
    default:
      return -1;
  }
}

std::string add_intermediate(Graph& g, const std::string& base,
                             const Shape& shape) {
  const std::string name = g.unique_tensor_name(base);
  g.add_tensor({name, shape, std::nullopt});
  return name;
}

std::string add_const(Graph& g, const std::string& base, NdArray data) {
  const std::string name = g.unique_tensor_name(base);
  g.add_constant(name, std::move(data));
  return name;
}

RangeMap input_ranges_of(const Graph& g, const RangeMap& ranges) {
  RangeMap out;
  for (const auto& name : g.inputs()) {
    auto it = ranges.find(name);
    if (it == ranges.end()) {
      throw StreamlineError("no range for graph input '" + name + "'");
    }
    out.emplace(name, it->second);
  }
  return out;
}

}  // namespace

std::string_view to_string(TargetPolicy policy) {
  switch (policy) {
    case TargetPolicy::activation_feeding:
      return "activation-feeding";
    case TargetPolicy::latest:
      return "latest";
    case TargetPolicy::earliest:
      return "earliest";
  }
  return "?";
}

TargetPolicy parse_target_policy(std::string_view text) {
  for (auto p : {TargetPolicy::activation_feeding, TargetPolicy::latest,
                 TargetPolicy::earliest}) {
    if (to_string(p) == text) return p;
  }
  throw StreamlineError("unknown target policy '" + std::string(text) +
                        "' (expected activation-feeding, latest or earliest)");
}

Graph duplicate_shared_params(const Graph& g) {
  Graph out = g;
  bool changed = true;
  while (changed) {
    changed = false;
    std::vector<std::string> constants;
    for (const auto& t : out.tensors()) {
      if (t.is_constant()) constants.push_back(t.name);
    }
    for (const auto& name : constants) {
      std::vector<std::pair<std::size_t, std::size_t>> uses;
      for (std::size_t i = 0; i < out.nodes().size(); ++i) {
        const auto& ins = out.nodes()[i].inputs;
        for (std::size_t s = 0; s < ins.size(); ++s) {
          if (ins[s] == name) uses.emplace_back(i, s);
        }
      }
      for (std::size_t u = 1; u < uses.size(); ++u) {
        const std::string copy =
            add_const(out, name + "_dup", *out.tensor(name).data);
        out.mutable_nodes()[uses[u].first].inputs[uses[u].second] = copy;
        changed = true;
      }
    }
    for (std::size_t i = 0; i < out.nodes().size() && !changed; ++i) {
      const Node node = out.nodes()[i];
      const int data = linear_data_input(out, node);
      if (data < 0) continue;
      const std::string& y = node.outputs[0];
      std::vector<std::pair<std::size_t, std::size_t>> uses;
      for (std::size_t j = 0; j < out.nodes().size(); ++j) {
        const auto& ins = out.nodes()[j].inputs;
        for (std::size_t s = 0; s < ins.size(); ++s) {
          if (ins[s] == y) uses.emplace_back(j, s);
        }
      }
      const std::size_t first = out.is_graph_output(y) ? 0 : 1;
      for (std::size_t u = first; u < uses.size(); ++u) {
        Node clone = node;
        clone.name = out.unique_node_name(node.name + "_dup");
        const std::string& param = node.inputs[1 - data];
        clone.inputs[1 - data] =
            add_const(out, param + "_dup", *out.tensor(param).data);
        clone.outputs[0] = add_intermediate(out, y + "_dup", out.tensor(y).shape);
        out.mutable_nodes()[uses[u].first].inputs[uses[u].second] =
            clone.outputs[0];
        out.mutable_nodes().push_back(std::move(clone));
        changed = true;
      }
    }
  }
  out.sort_nodes();
  return out;
}

Graph make_quantizers_explicit(const Graph& g) {
  Graph out = g;
  std::vector<Node> nodes;
  for (const Node& node : g.nodes()) {
    if (node.op != OpType::Quant || is_unit_quant(g, node)) {
      nodes.push_back(node);
      continue;
    }
    const std::string& x = node.inputs[0];
    const std::string& s = node.inputs[1];
    const std::string& z = node.inputs[2];
    if (!g.is_constant(s) || !g.is_constant(z)) {
      throw StreamlineError("quantizer '" + node.name +
                            "' has a dynamic scale or zero-point");
    }
    const bool has_zero = !all_equal_to(*g.tensor(z).data, 0.0);
    const std::string& y = node.outputs[0];
    const Shape& shape = g.tensor(y).shape;
    const auto& q = node.quant();
    if (g.is_constant(x)) {
      const auto qmin = static_cast<double>(q.qmin());
      const auto qmax = static_cast<double>(q.qmax());
      const NdArray codes =
          map(*g.tensor(x).data, *g.tensor(s).data, *g.tensor(z).data,
              [=](double v, double sv, double zv) {
                return quantize_code(v, sv, zv, qmin, qmax);
              });
      std::string cur = add_const(out, x + "_int", codes);
      if (has_zero) {
        const std::string t = add_intermediate(out, y + "_centered", shape);
        nodes.push_back({node.name + "_center", OpType::Sub, {cur, z}, {t}, {}});
        cur = t;
      }
      nodes.push_back({node.name, OpType::Mul, {cur, s}, {y}, {}});
      continue;
    }
    std::string cur = add_intermediate(out, y + "_prescaled", shape);
    nodes.push_back({node.name + "_prescale", OpType::Div, {x, s}, {cur}, {}});
    if (has_zero) {
      const std::string t = add_intermediate(out, y + "_shifted", shape);
      nodes.push_back({node.name + "_shift", OpType::Add, {cur, z}, {t}, {}});
      cur = t;
    }
    const std::string one =
        add_const(out, node.name + "_unit_scale", NdArray::scalar(1.0));
    const std::string zero =
        add_const(out, node.name + "_unit_zero", NdArray::scalar(0.0));
    const std::string codes = add_intermediate(out, y + "_int", shape);
    nodes.push_back({node.name, OpType::Quant, {cur, one, zero}, {codes}, q});
    cur = codes;
    if (has_zero) {
      const std::string t = add_intermediate(out, y + "_centered", shape);
      nodes.push_back({node.name + "_center", OpType::Sub, {cur, z}, {t}, {}});
      cur = t;
    }
    nodes.push_back({node.name + "_dequant", OpType::Mul, {cur, s}, {y}, {}});
  }
  std::set<std::string> seen;
  for (auto& n : nodes) {
    const std::string base = n.name;
    for (int i = 1; !seen.insert(n.name).second; ++i) {
      n.name = base + "_" + std::to_string(i);
    }
  }
  out.mutable_nodes() = std::move(nodes);
  out = duplicate_shared_params(out);
  out.prune_unused_tensors();
  out.validate();
  return out;
}

std::vector<TargetSelection> select_targets(const Graph& g,
                                            TargetPolicy policy) {
  std::vector<TargetSelection> out;
  for (auto idx : topo_sort(g)) {
    const Node& mac = g.nodes()[idx];
    if (!is_mac(mac)) continue;
    TargetSelection sel;
    sel.mac_node = mac.name;
    sel.region_nodes = {mac.name};
    std::string cur = mac.outputs[0];
    if (policy == TargetPolicy::earliest) {
      sel.target_tensor = cur;
      out.push_back(std::move(sel));
      continue;
    }
    while (!g.is_graph_output(cur)) {
      const auto users = g.consumers(cur);
      if (users.size() != 1) break;
      const Node& n = g.nodes()[users[0]];
      const int data = linear_data_input(g, n);
      if (data < 0 || n.inputs[data] != cur) break;
      sel.region_nodes.push_back(n.name);
      cur = n.outputs[0];
    }
    if (policy == TargetPolicy::activation_feeding) {
      if (g.is_graph_output(cur)) continue;
      const auto users = g.consumers(cur);
      if (users.size() != 1) continue;
      const OpType op = g.nodes()[users[0]].op;
      if (op != OpType::Relu && op != OpType::Quant &&
          op != OpType::MultiThreshold) {
        continue;
      }
    }
    sel.target_tensor = cur;
    out.push_back(std::move(sel));
  }
  return out;
}

Graph remove_identity_ops(const Graph& g) {
  Graph out = g;
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < out.nodes().size(); ++i) {
      const Node n = out.nodes()[i];
      const int data = identity_data_input(out, n);
      if (data < 0) continue;
      const std::string x = n.inputs[data];
      const std::string y = n.outputs[0];
      if (out.tensor(x).shape != out.tensor(y).shape) continue;
      if (!out.is_graph_output(y)) {
        out.remove_nodes({i});
        out.replace_uses(y, x);
        changed = true;
        break;
      }
      if (!out.producer(x) || out.is_graph_output(x) || out.is_graph_input(x)) {
        continue;
      }
      out.remove_nodes({i});
      out.mutable_nodes()[*out.producer(x)].outputs[0] = y;
      out.replace_uses(x, y);
      changed = true;
      break;
    }
  }
  out.prune_unused_tensors();
  return out;
}

Graph aggregate_scale_bias(const Graph& g, const RangeMap& ranges,
                           TargetPolicy policy,
                           std::vector<AggregatedTarget>* applied) {
  const RangeMap inputs = input_ranges_of(g, ranges);
  const auto targets = select_targets(g, policy);
  const bool has_mac = std::any_of(g.nodes().begin(), g.nodes().end(), is_mac);
  if (has_mac && targets.empty()) {
    throw StreamlineError("no " + std::string(to_string(policy)) +
                          " target tensor found in any linear region");
  }
  Graph cur = g;
  for (auto it = targets.rbegin(); it != targets.rend(); ++it) {
    const std::string& t = it->target_tensor;
    if (!cur.has_tensor(t)) continue;
    const RangeMap r = analyze(cur, inputs);
    const ScaledIntRange& tr = r.at(t);
    if (!tr.is_scaled_int()) {
      log::info("target '", t, "' has no scaled-integer range; skipped");
      continue;
    }
    std::vector<std::pair<std::string, ContributionRole>> erase;
    for (const auto& [name, role] : tr.contributors) {
      if (!cur.is_constant(name)) continue;
      const double identity = role == ContributionRole::scale ? 1.0 : 0.0;
      if (!all_equal_to(*cur.tensor(name).data, identity)) {
        erase.emplace_back(name, role);
      }
    }
    const bool unit_scale = all_equal_to(*tr.scale, 1.0);
    const bool zero_bias = all_equal_to(*tr.bias, 0.0);
    if (erase.empty()) {
      if (unit_scale && zero_bias) continue;
      throw StreamlineError("target '" + t +
                            "' has a non-identity scale or bias but no "
                            "contributing parameters");
    }
    std::set<std::string> immediate;
    if (auto p = cur.producer(t)) {
      const Node* n = &cur.nodes()[*p];
      int data = linear_data_input(cur, *n);
      if (data >= 0 && n->op == OpType::Add) {
        immediate.insert(n->inputs[1 - data]);
        const auto q = cur.producer(n->inputs[data]);
        n = q ? &cur.nodes()[*q] : nullptr;
        data = n ? linear_data_input(cur, *n) : -1;
      }
      if (data >= 0 && n->op == OpType::Mul) immediate.insert(n->inputs[1 - data]);
    }
    if (std::all_of(erase.begin(), erase.end(),
                    [&](const auto& e) { return immediate.count(e.first); })) {
      log::debug("target '", t, "' is already aggregated");
      continue;
    }

    Graph trial = cur;
    std::string first_inserted;
    if (!(unit_scale && zero_bias)) {
      const std::size_t p = *trial.producer(t);
      const Shape shape = trial.tensor(t).shape;
      std::string in = add_intermediate(trial, t + "_pre", shape);
      trial.mutable_nodes()[p].outputs[0] = in;
      if (!unit_scale) {
        const std::string sc = add_const(trial, t + "_aggr_scale", *tr.scale);
        const std::string y =
            zero_bias ? t : add_intermediate(trial, t + "_scaled", shape);
        first_inserted = trial.unique_node_name(t + "_aggr_mul");
        trial.add_node({first_inserted, OpType::Mul, {in, sc}, {y}, {}});
        in = y;
      }
      if (!zero_bias) {
        const std::string bc = add_const(trial, t + "_aggr_bias", *tr.bias);
        const std::string name = trial.unique_node_name(t + "_aggr_add");
        if (first_inserted.empty()) first_inserted = name;
        trial.add_node({name, OpType::Add, {in, bc}, {t}, {}});
      }
    }
    AggregatedTarget record{t, *tr.scale, *tr.bias, {}};
    for (const auto& [name, role] : erase) {
      auto& info = trial.mutable_tensor(name);
      info.data = NdArray::full(info.shape,
                                role == ContributionRole::scale ? 1.0 : 0.0);
      record.erased.push_back(name);
    }
    trial = remove_identity_ops(trial);
    trial.sort_nodes();
    trial.validate();

    const RangeMap r2 = analyze(trial, inputs);
    std::string int_tensor = t;
    if (const Node* n = trial.find_node(first_inserted)) {
      int_tensor = n->inputs[0];
    }
    const ScaledIntRange& ir = r2.at(int_tensor);
    const bool exact = ir.is_unit() && ir.int_range->shape() == tr.int_range->shape() &&
                       all_close(ir.int_range->lo(), tr.int_range->lo(), 0.0, 1e-9) &&
                       all_close(ir.int_range->hi(), tr.int_range->hi(), 0.0, 1e-9);
    if (!exact) {
      log::warn("target '", t,
                "': erasing its contributors changes the integer range; "
                "left unaggregated");
      continue;
    }
    cur = std::move(trial);
    if (applied) applied->push_back(std::move(record));
  }
  return cur;
}

double max_relative_deviation(const Graph& reference, const Graph& candidate,
                              const RangeMap& input_ranges,
                              std::size_t samples, uint64_t seed) {
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    const TensorMap inputs = sample_inputs(reference, input_ranges, rng);
    const TensorMap a = run(reference, inputs);
    const TensorMap b = run(candidate, inputs);
    for (const auto& name : reference.outputs()) {
      const NdArray& va = a.at(name);
      const NdArray& vb = b.at(name);
      for (std::size_t i = 0; i < va.size(); ++i) {
        const double denom =
            std::max({std::abs(va[i]), std::abs(vb[i]), 1e-6});
        worst = std::max(worst, std::abs(va[i] - vb[i]) / denom);
      }
    }
  }
  return worst;
}

StreamlineResult streamline(const Graph& g, const RangeMap& input_ranges,
                            const StreamlineOptions& options) {
  Graph work = make_quantizers_explicit(duplicate_shared_params(lower(g)));
  const RangeMap ranges = analyze(work, input_ranges);
  StreamlineResult result;
  work = aggregate_scale_bias(work, ranges, options.policy, &result.targets);
  work = remove_identity_ops(work);
  work.sort_nodes();
  work.validate();
  result.graph = std::move(work);
  result.deviation_samples = options.deviation_samples;
  if (options.deviation_samples > 0) {
    result.max_rel_deviation =
        max_relative_deviation(g, result.graph, input_ranges,
                               options.deviation_samples, options.seed);
  }
  return result;
}

}  // namespace qrange
