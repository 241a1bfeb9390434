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

#include "qrange/threshold.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "qrange/error.hpp"
#include "qrange/log.hpp"
#include "qrange/scalar_ops.hpp"

namespace qrange {

void ThresholdTable::validate() const {
  const std::size_t c = values.size();
  if (c == 0 || bias.size() != c || domain_lo.size() != c ||
      domain_hi.size() != c) {
    throw ThresholdError("threshold table rows, biases and domains disagree");
  }
  for (std::size_t r = 0; r < c; ++r) {
    const auto& row = values[r];
    if (row.size() != count()) {
      throw ThresholdError("threshold row " + std::to_string(r) + " has " +
                           std::to_string(row.size()) + " entries, expected " +
                           std::to_string(count()));
    }
    if (!std::is_sorted(row.begin(), row.end())) {
      throw ThresholdError("threshold row " + std::to_string(r) +
                           " is not sorted");
    }
    if (row.front() < static_cast<double>(domain_lo[r]) ||
        row.back() > static_cast<double>(domain_hi[r] + 1)) {
      throw ThresholdError("threshold row " + std::to_string(r) +
                           " leaves its input domain");
    }
  }
}

NdArray ThresholdTable::to_tensor() const {
  std::vector<double> flat;
  flat.reserve(channels() * count());
  for (const auto& row : values) flat.insert(flat.end(), row.begin(), row.end());
  return NdArray({static_cast<int64_t>(channels()),
                  static_cast<int64_t>(count())},
                 std::move(flat));
}

int64_t sign_bias(int n, bool is_signed, bool narrow) {
  if (n < 1) throw ThresholdError("output bitwidth must be positive");
  if (narrow && !is_signed) {
    throw ThresholdError("narrow output range requires a signed output");
  }
  if (!is_signed) return 0;
  const int64_t half = int64_t{1} << (n - 1);
  return narrow ? -half + 1 : -half;
}

ThresholdTable extract_thresholds(const TailFunction& f,
                                  const std::vector<int64_t>& domain_lo,
                                  const std::vector<int64_t>& domain_hi,
                                  int out_bits, double bias) {
  if (out_bits < 1 || out_bits > 24) {
    throw ThresholdError("output bitwidth must lie in [1, 24]");
  }
  if (domain_lo.size() != domain_hi.size() || domain_lo.empty()) {
    throw ThresholdError("threshold domains must be given per channel");
  }
  ThresholdTable t;
  t.out_bits = out_bits;
  t.domain_lo = domain_lo;
  t.domain_hi = domain_hi;
  const std::size_t n = t.count();
  for (std::size_t c = 0; c < domain_lo.size(); ++c) {
    const int64_t lo = domain_lo[c];
    const int64_t hi = domain_hi[c];
    if (hi < lo) throw ThresholdError("empty threshold input domain");
    if (hi - lo + 1 > kMaxThresholdDomain) {
      throw ThresholdError("input domain of channel " + std::to_string(c) +
                           " has " + std::to_string(hi - lo + 1) +
                           " points, above the exhaustive-evaluation cap of " +
                           std::to_string(kMaxThresholdDomain));
    }
    auto code = [&](int64_t x) {
      const double v = f(x, c);
      if (!std::isfinite(v) || std::abs(v - std::nearbyint(v)) > kIntegerTolerance) {
        throw ThresholdError("tail output " + std::to_string(v) + " at x = " +
                             std::to_string(x) + " is not an integer code");
      }
      return static_cast<int64_t>(std::nearbyint(v));
    };
    std::vector<double> row;
    row.reserve(n);
    int64_t prev = code(lo);
    const int64_t left = prev - static_cast<int64_t>(std::nearbyint(bias));
    if (left < 0 || static_cast<std::size_t>(left) > n) {
      throw ThresholdError("tail output at the domain minimum lies outside "
                           "the representable codes");
    }
    row.assign(static_cast<std::size_t>(left), static_cast<double>(lo));
    for (int64_t x = lo + 1; x <= hi; ++x) {
      const int64_t v = code(x);
      const int64_t step = v - prev;
      if (step < 0) {
        throw ThresholdError("layer tail is not monotonically non-decreasing "
                             "on channel " + std::to_string(c) + " at x = " +
                             std::to_string(x));
      }
      if (row.size() + static_cast<std::size_t>(step) > n) {
        throw ThresholdError("layer tail exceeds " + std::to_string(n) +
                             " output steps");
      }
      row.insert(row.end(), static_cast<std::size_t>(step),
                 static_cast<double>(x));
      prev = v;
    }
    row.resize(n, static_cast<double>(hi + 1));
    t.values.push_back(std::move(row));
    t.bias.push_back(bias);
  }
  return t;
}

namespace {

struct TailStep {
  OpType op = OpType::Relu;
  bool param_first = false;
  std::vector<double> p;  // per channel parameter (Add/Sub/Mul/Div)
  std::vector<double> s, z;
  double qmin = 0.0, qmax = 0.0;
  int bits = 0;
};

int tail_data_input(const Graph& g, const Node& n) {
  switch (n.op) {
    case OpType::Relu:
      return 0;
    case OpType::Add:
    case OpType::Mul:
      if (g.is_constant(n.inputs[1])) return 0;
      if (g.is_constant(n.inputs[0])) return 1;
      return -1;
    case OpType::Sub:
    case OpType::Div:
      return g.is_constant(n.inputs[1]) ? 0 : -1;
    case OpType::Quant:
      return g.is_constant(n.inputs[1]) && g.is_constant(n.inputs[2]) ? 0 : -1;
    default:
      return -1;
  }
}

std::optional<std::vector<double>> per_channel(const Graph& g,
                                               const std::string& name,
                                               const Shape& shape) {
  std::vector<double> v;
  const NdArray& data = *g.tensor(name).data;
  if (broadcast_shapes(shape, data.shape()) != shape) return std::nullopt;
  if (shape.empty()) return std::vector<double>{data[0]};
  if (!reduce_to_axis(data, shape, channel_axis(shape), &v)) return std::nullopt;
  return v;
}

std::optional<std::vector<TailStep>> tail_steps(const Graph& g,
                                                const Tail& tail,
                                                const Shape& shape) {
  std::vector<TailStep> steps;
  for (const auto& name : tail.nodes) {
    const Node* n = g.find_node(name);
    if (!n) return std::nullopt;
    const int data = tail_data_input(g, *n);
    if (data < 0) return std::nullopt;
    TailStep st;
    st.op = n->op;
    if (n->op == OpType::Quant) {
      auto s = per_channel(g, n->inputs[1], shape);
      auto z = per_channel(g, n->inputs[2], shape);
      if (!s || !z) return std::nullopt;
      st.s = std::move(*s);
      st.z = std::move(*z);
      st.qmin = static_cast<double>(n->quant().qmin());
      st.qmax = static_cast<double>(n->quant().qmax());
      st.bits = n->quant().bitwidth;
    } else if (n->op != OpType::Relu) {
      auto p = per_channel(g, n->inputs[1 - data], shape);
      if (!p) return std::nullopt;
      st.p = std::move(*p);
      st.param_first = data == 1;
    }
    steps.push_back(std::move(st));
  }
  if (steps.empty() || steps.back().op != OpType::Quant) return std::nullopt;
  return steps;
}

ElementwiseFn fn_of(OpType op) {
  switch (op) {
    case OpType::Add:
      return ElementwiseFn::add;
    case OpType::Sub:
      return ElementwiseFn::sub;
    case OpType::Mul:
      return ElementwiseFn::mul;
    case OpType::Div:
      return ElementwiseFn::div;
    default:
      return ElementwiseFn::relu;
  }
}

double run_steps(const std::vector<TailStep>& steps, double v, std::size_t c) {
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const TailStep& st = steps[i];
    auto at = [c](const std::vector<double>& p) {
      return p.size() == 1 ? p[0] : p[c];
    };
    switch (st.op) {
      case OpType::Relu:
        v = apply(ElementwiseFn::relu, v);
        break;
      case OpType::Quant:
        v = i + 1 == steps.size()
                ? quantize_code(v, at(st.s), at(st.z), st.qmin, st.qmax)
                : quantize(v, at(st.s), at(st.z), st.qmin, st.qmax);
        break;
      default:
        v = st.param_first ? apply(fn_of(st.op), at(st.p), v)
                           : apply(fn_of(st.op), v, at(st.p));
    }
  }
  return v;
}

bool per_tensor(const std::vector<TailStep>& steps) {
  auto uniform = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [&](double x) { return x == v[0]; });
  };
  return std::all_of(steps.begin(), steps.end(), [&](const TailStep& s) {
    return uniform(s.p) && uniform(s.s) && uniform(s.z);
  });
}

std::optional<ThresholdTable> build_table(const Graph& g, const Tail& tail,
                                          const ScaledIntRange& in_range) {
  if (!in_range.is_unit()) {
    throw ThresholdError("tail input '" + tail.input +
                         "' is not an integer tensor with scale 1 and bias 0");
  }
  const Shape& shape = in_range.shape();
  const auto steps = tail_steps(g, tail, shape);
  if (!steps) return std::nullopt;
  const bool shared = per_tensor(*steps);
  const auto chan = channel_of_elements(shape);
  const std::size_t c_dim =
      shape.empty() ? 1 : static_cast<std::size_t>(shape[channel_axis(shape)]);
  const std::size_t rows = shared ? 1 : c_dim;
  std::vector<int64_t> lo(rows, std::numeric_limits<int64_t>::max());
  std::vector<int64_t> hi(rows, std::numeric_limits<int64_t>::min());
  for (std::size_t e = 0; e < chan.size(); ++e) {
    const std::size_t r = shared ? 0 : static_cast<std::size_t>(chan[e]);
    lo[r] = std::min(lo[r], static_cast<int64_t>(std::nearbyint(in_range.int_range->lo()[e])));
    hi[r] = std::max(hi[r], static_cast<int64_t>(std::nearbyint(in_range.int_range->hi()[e])));
  }
  const TailStep& last = steps->back();
  const auto f = [&](int64_t x, std::size_t c) {
    return run_steps(*steps, static_cast<double>(x), c);
  };
  return extract_thresholds(f, lo, hi, last.bits, last.qmin);
}

}  // namespace

std::optional<Tail> find_tail(const Graph& g, const RangeMap& ranges,
                              const std::string& anchor) {
  const Node* q = g.find_node(anchor);
  if (!q || q->op != OpType::Quant || tail_data_input(g, *q) != 0) {
    return std::nullopt;
  }
  std::deque<std::string> chain{anchor};
  std::string cur = q->inputs[0];
  std::optional<Tail> best;
  while (true) {
    auto it = ranges.find(cur);
    if (!g.is_constant(cur) && it != ranges.end() && it->second.is_unit()) {
      best = Tail{cur, {chain.begin(), chain.end()}};
    }
    const auto p = g.producer(cur);
    if (!p || g.is_graph_output(cur) || g.consumers(cur).size() != 1) break;
    const Node& n = g.nodes()[*p];
    const int data = tail_data_input(g, n);
    if (data < 0) break;
    if (g.tensor(n.inputs[data]).shape != g.tensor(cur).shape) break;
    chain.push_front(n.name);
    cur = n.inputs[data];
  }
  return best;
}

ThresholdTable extract_thresholds(const Graph& g, const Tail& tail,
                                  const ScaledIntRange& in_range) {
  auto table = build_table(g, tail, in_range);
  if (!table) {
    throw ThresholdError("tail starting at '" + tail.input +
                         "' is not elementwise with per-channel parameters");
  }
  return std::move(*table);
}

int64_t eval_parallel(const ThresholdTable& t, int64_t x, std::size_t c) {
  if (c >= t.channels()) {
    throw ThresholdError("channel " + std::to_string(c) + " out of range");
  }
  int64_t count = 0;
  for (double th : t.values[c]) count += static_cast<double>(x) >= th;
  return static_cast<int64_t>(std::nearbyint(t.bias[c])) + count;
}

int64_t eval_binary_search(const ThresholdTable& t, int64_t x, std::size_t c) {
  if (c >= t.channels()) {
    throw ThresholdError("channel " + std::to_string(c) + " out of range");
  }
  const auto& row = t.values[c];
  if (row.size() != t.count() || !std::is_sorted(row.begin(), row.end())) {
    throw ThresholdError("binary search needs a sorted table of 2^n - 1 "
                         "entries");
  }
  const auto pad = static_cast<double>(t.domain_hi[c]);
  int64_t idx = 0;
  for (int level = t.out_bits - 1; level >= 0; --level) {
    const int64_t step = int64_t{1} << level;
    const double th = row[static_cast<std::size_t>(idx + step - 1)];
    if (th <= pad && static_cast<double>(x) >= th) idx += step;
  }
  return static_cast<int64_t>(std::nearbyint(t.bias[c])) + idx;
}

Graph convert_tails(const Graph& g, const RangeMap& ranges,
                    std::vector<ConvertedTail>* converted) {
  Graph out = g;
  std::vector<std::string> anchors;
  for (auto idx : topo_sort(g)) {
    if (g.nodes()[idx].op == OpType::Quant) anchors.push_back(g.nodes()[idx].name);
  }
  std::reverse(anchors.begin(), anchors.end());
  for (const auto& anchor : anchors) {
    if (!out.find_node(anchor)) continue;
    const auto tail = find_tail(out, ranges, anchor);
    if (!tail) {
      log::debug("quantizer '", anchor, "' has no convertible tail");
      continue;
    }
    const Node q = *out.find_node(anchor);
    if (q.quant().bitwidth > 16) {
      log::info("quantizer '", anchor, "' is wider than 16 bits; not converted");
      continue;
    }
    std::optional<ThresholdTable> table;
    try {
      table = build_table(out, *tail, ranges.at(tail->input));
    } catch (const ThresholdError& e) {
      log::warn("tail of '", anchor, "' not converted: ", e.what());
      continue;
    }
    if (!table) {
      log::info("tail of '", anchor, "' is not per-channel; not converted");
      continue;
    }
    const std::string& s = q.inputs[1];
    const std::string& z = q.inputs[2];
    const bool zero = all_equal_to(*out.tensor(z).data, 0.0);
    const bool unit = zero && all_equal_to(*out.tensor(s).data, 1.0);
    const std::string y = q.outputs[0];
    const Shape shape = out.tensor(y).shape;

    std::vector<std::size_t> remove;
    for (const auto& name : tail->nodes) {
      for (std::size_t i = 0; i < out.nodes().size(); ++i) {
        if (out.nodes()[i].name == name) remove.push_back(i);
      }
    }
    out.remove_nodes(remove);
    const std::string th = out.unique_tensor_name(anchor + "_thresholds");
    out.add_constant(th, table->to_tensor());
    std::string codes = y;
    if (!unit) {
      codes = out.unique_tensor_name(y + "_codes");
      out.add_tensor({codes, shape, std::nullopt});
    }
    MultiThresholdAttrs attrs;
    attrs.bias = {table->bias[0]};
    attrs.out_bits = table->out_bits;
    const std::string mt = out.unique_node_name(anchor + "_mt");
    out.add_node({mt, OpType::MultiThreshold, {tail->input, th}, {codes}, attrs});
    if (!unit) {
      std::string cur = codes;
      if (!zero) {
        const std::string centered = out.unique_tensor_name(y + "_centered");
        out.add_tensor({centered, shape, std::nullopt});
        out.add_node({out.unique_node_name(anchor + "_center"), OpType::Sub,
                      {cur, z}, {centered}, {}});
        cur = centered;
      }
      out.add_node({out.unique_node_name(anchor + "_dequant"), OpType::Mul,
                    {cur, s}, {y}, {}});
    }
    out.sort_nodes();
    out.prune_unused_tensors();
    if (converted) {
      int64_t max_step = 0;
      for (std::size_t r = 0; r < table->channels(); ++r) {
        const auto& row = table->values[r];
        const auto lo = static_cast<double>(table->domain_lo[r]);
        const auto hi = static_cast<double>(table->domain_hi[r]);
        int64_t run = 0;
        for (std::size_t i = 0; i < row.size(); ++i) {
          if (row[i] <= lo || row[i] > hi) continue;
          run = i > 0 && row[i] == row[i - 1] ? run + 1 : 1;
          max_step = std::max(max_step, run);
        }
      }
      converted->push_back({anchor, mt, table->channels(), table->out_bits, max_step});
    }
  }
  out.validate();
  return out;
}

}  // namespace qrange
