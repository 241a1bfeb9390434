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

#include "qrange/interpreter.hpp"

#include <cmath>

#include "qrange/error.hpp"
#include "qrange/log.hpp"
#include "qrange/scalar_ops.hpp"

namespace qrange {
namespace {

constexpr std::size_t kMaxRecordedViolations = 20;

const NdArray& value_of(const TensorMap& values, const std::string& name,
                        const Node& node) {
  auto it = values.find(name);
  if (it == values.end()) {
    throw InterpreterError("node '" + node.name + "' reads '" + name +
                           "' before it is computed");
  }
  return it->second;
}

NdArray elementwise(ElementwiseFn f, const NdArray& a, const NdArray& b) {
  return map(a, b, [f](double x, double y) { return apply(f, x, y); });
}

NdArray per_channel(const std::vector<double>& v, const Shape& shape) {
  Shape s(shape.size(), 1);
  if (!shape.empty()) s[channel_axis(shape)] = static_cast<int64_t>(v.size());
  return NdArray(s, v);
}

NdArray multithreshold(const NdArray& x, const NdArray& t,
                       const MultiThresholdAttrs& attrs) {
  const Shape& shape = x.shape();
  const int64_t c_dim = shape.empty() ? 1 : shape[channel_axis(shape)];
  if (t.rank() != 2 || (t.shape()[0] != 1 && t.shape()[0] != c_dim)) {
    throw InterpreterError("threshold tensor shape " +
                           shape_to_string(t.shape()) + " does not fit " +
                           std::to_string(c_dim) + " channels");
  }
  if (attrs.bias.size() != 1 &&
      static_cast<int64_t>(attrs.bias.size()) != c_dim) {
    throw InterpreterError("multi-threshold bias must have 1 or C entries");
  }
  const int64_t n = t.shape()[1];
  const auto channels = channel_of_elements(shape);
  std::vector<double> out(x.size());
  for (std::size_t e = 0; e < out.size(); ++e) {
    const int64_t c = channels[e];
    const int64_t row = t.shape()[0] == 1 ? 0 : c;
    int64_t count = 0;
    for (int64_t i = 0; i < n; ++i) count += x[e] >= t[row * n + i];
    const double b = attrs.bias.size() == 1 ? attrs.bias[0] : attrs.bias[c];
    out[e] = b + static_cast<double>(count);
  }
  return NdArray(shape, std::move(out));
}

NdArray batchnorm(const NdArray& x, const NdArray& gamma, const NdArray& beta,
                  const NdArray& mean, const NdArray& var, double eps) {
  const auto shape = x.shape();
  const auto channels = channel_of_elements(shape);
  std::vector<double> out(x.size());
  for (std::size_t e = 0; e < out.size(); ++e) {
    const auto c = static_cast<std::size_t>(channels[e]);
    out[e] = (x[e] - mean[c]) / std::sqrt(var[c] + eps) * gamma[c] + beta[c];
  }
  return NdArray(shape, std::move(out));
}

}  // namespace

NdArray matmul(const NdArray& a, const NdArray& b) {
  const Shape& as = a.shape();
  const Shape& bs = b.shape();
  if (as.empty() || bs.size() != 2 || as.back() != bs[0]) {
    throw ShapeError("matmul shape mismatch: " + shape_to_string(as) + " x " +
                     shape_to_string(bs));
  }
  const int64_t k = bs[0];
  const int64_t m = bs[1];
  const int64_t rows = num_elements(as) / k;
  Shape out_shape = as;
  out_shape.back() = m;
  std::vector<double> out(static_cast<std::size_t>(rows * m), 0.0);
  for (int64_t r = 0; r < rows; ++r) {
    for (int64_t kk = 0; kk < k; ++kk) {
      const double av = a[r * k + kk];
      for (int64_t j = 0; j < m; ++j) out[r * m + j] += av * b[kk * m + j];
    }
  }
  return NdArray(out_shape, std::move(out));
}

NdArray conv2d(const NdArray& x, const NdArray& w, const ConvAttrs& attrs) {
  const ConvGeometry geo = conv_geometry(x.shape(), w.shape(), attrs);
  const Shape out_shape{geo.batch, geo.out_channels, geo.out_h, geo.out_w};
  std::vector<double> out(static_cast<std::size_t>(num_elements(out_shape)));
  const int64_t cin_g = geo.in_per_group();
  std::size_t o = 0;
  for (int64_t n = 0; n < geo.batch; ++n) {
    for (int64_t co = 0; co < geo.out_channels; ++co) {
      const int64_t g = co / geo.out_per_group();
      for (int64_t oh = 0; oh < geo.out_h; ++oh) {
        for (int64_t ow = 0; ow < geo.out_w; ++ow, ++o) {
          double acc = 0.0;
          for (int64_t ci = 0; ci < cin_g; ++ci) {
            const int64_t c = g * cin_g + ci;
            for (int64_t kh = 0; kh < geo.kernel_h; ++kh) {
              const int64_t ih = oh * geo.stride_h + kh - geo.pad_top;
              if (ih < 0 || ih >= geo.in_h) continue;
              for (int64_t kw = 0; kw < geo.kernel_w; ++kw) {
                const int64_t iw = ow * geo.stride_w + kw - geo.pad_left;
                if (iw < 0 || iw >= geo.in_w) continue;
                acc += x[((n * geo.in_channels + c) * geo.in_h + ih) * geo.in_w + iw] *
                       w[((co * cin_g + ci) * geo.kernel_h + kh) * geo.kernel_w + kw];
              }
            }
          }
          out[o] = acc;
        }
      }
    }
  }
  return NdArray(out_shape, std::move(out));
}

NdArray eval_node(const Graph& g, const Node& node, const TensorMap& values) {
  auto in = [&](std::size_t i) -> const NdArray& {
    return value_of(values, node.inputs.at(i), node);
  };
  switch (node.op) {
    case OpType::Quant: {
      const auto& q = node.quant();
      const auto qmin = static_cast<double>(q.qmin());
      const auto qmax = static_cast<double>(q.qmax());
      return map(in(0), in(1), in(2), [=](double x, double s, double z) {
        return quantize(x, s, z, qmin, qmax);
      });
    }
    case OpType::Add:
      return elementwise(ElementwiseFn::add, in(0), in(1));
    case OpType::Sub:
      return elementwise(ElementwiseFn::sub, in(0), in(1));
    case OpType::Mul:
      return elementwise(ElementwiseFn::mul, in(0), in(1));
    case OpType::Div:
      return elementwise(ElementwiseFn::div, in(0), in(1));
    case OpType::Relu:
      return map(in(0), [](double x) { return apply(ElementwiseFn::relu, x); });
    case OpType::MatMul:
      return matmul(in(0), in(1));
    case OpType::Gemm: {
      NdArray y = matmul(in(0), in(1));
      if (node.inputs.size() == 3) y = elementwise(ElementwiseFn::add, y, in(2));
      return y;
    }
    case OpType::Conv: {
      NdArray y = conv2d(in(0), in(1), node.conv());
      if (node.inputs.size() == 3) {
        y = elementwise(ElementwiseFn::add, y,
                        per_channel(in(2).values(), y.shape()));
      }
      return y;
    }
    case OpType::BatchNormalization:
      return batchnorm(in(0), in(1), in(2), in(3), in(4),
                       node.batchnorm().epsilon);
    case OpType::MultiThreshold:
      return multithreshold(in(0), in(1), node.multithreshold());
  }
  (void)g;
  throw InterpreterError("unsupported operator at node '" + node.name + "'");
}

TensorMap run_all(const Graph& g, const TensorMap& inputs) {
  TensorMap values;
  for (const auto& t : g.tensors()) {
    if (t.is_constant()) values.emplace(t.name, *t.data);
  }
  for (const auto& name : g.inputs()) {
    auto it = inputs.find(name);
    if (it == inputs.end()) {
      throw InterpreterError("missing value for graph input '" + name + "'");
    }
    const Shape& shape = g.tensor(name).shape;
    if (it->second.shape() != shape) {
      if (static_cast<int64_t>(it->second.size()) != num_elements(shape)) {
        throw InterpreterError("input '" + name + "' has shape " +
                               shape_to_string(it->second.shape()) +
                               ", expected " + shape_to_string(shape));
      }
      values[name] = it->second.reshaped(shape);
    } else {
      values[name] = it->second;
    }
  }
  for (auto idx : topo_sort(g)) {
    const Node& node = g.nodes()[idx];
    NdArray y;
    try {
      y = eval_node(g, node, values);
    } catch (const ShapeError& e) {
      throw InterpreterError("node '" + node.name + "': " + e.what());
    }
    const Shape& expected = g.tensor(node.outputs[0]).shape;
    if (y.shape() != expected) {
      throw InterpreterError("node '" + node.name + "' produced shape " +
                             shape_to_string(y.shape()) + ", expected " +
                             shape_to_string(expected));
    }
    for (double v : y.values()) {
      if (!std::isfinite(v)) {
        throw InterpreterError("node '" + node.name +
                               "' produced a NaN or infinite value");
      }
    }
    values[node.outputs[0]] = std::move(y);
  }
  return values;
}

TensorMap run(const Graph& g, const TensorMap& inputs) {
  TensorMap all = run_all(g, inputs);
  TensorMap out;
  for (const auto& name : g.outputs()) out[name] = all.at(name);
  return out;
}

void ExecutionTrace::record(const TensorMap& values) {
  for (const auto& [name, v] : values) {
    auto it = observed.find(name);
    if (it == observed.end()) {
      observed.emplace(name, Interval::point(v));
      continue;
    }
    NdArray lo = it->second.lo();
    NdArray hi = it->second.hi();
    for (std::size_t i = 0; i < v.size(); ++i) {
      lo[i] = std::min(lo[i], v[i]);
      hi[i] = std::max(hi[i], v[i]);
    }
    it->second = Interval(lo, hi);
  }
  ++samples;
}

TensorMap sample_inputs(const Graph& g, const RangeMap& ranges,
                        std::mt19937_64& rng, double corner_prob) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  TensorMap out;
  for (const auto& name : g.inputs()) {
    auto it = ranges.find(name);
    if (it == ranges.end()) {
      throw InterpreterError("no range to sample input '" + name + "' from");
    }
    const ScaledIntRange& r = it->second;
    const bool integer = r.is_scaled_int();
    const Shape& shape = g.tensor(name).shape;
    const Interval& declared = integer ? *r.int_range : r.range;
    const Interval box =
        declared.shape() == shape ? declared : declared.broadcast_to(shape);
    std::vector<double> v(box.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double lo = box.lo()[i];
      const double hi = box.hi()[i];
      const double pick = unit(rng);
      if (pick < corner_prob / 2) {
        v[i] = lo;
      } else if (pick < corner_prob) {
        v[i] = hi;
      } else if (integer) {
        std::uniform_int_distribution<int64_t> d(static_cast<int64_t>(lo),
                                                 static_cast<int64_t>(hi));
        v[i] = static_cast<double>(d(rng));
      } else {
        v[i] = lo + (hi - lo) * unit(rng);
      }
    }
    NdArray x(box.shape(), std::move(v));
    if (integer) {
      x = map(x, r.scale->broadcast_to(x.shape()),
              [](double z, double s) { return s * z; });
      x = map(x, r.bias->broadcast_to(x.shape()),
              [](double z, double b) { return z + b; });
    }
    out[name] = std::move(x);
  }
  return out;
}

VerifyReport verify_ranges(const Graph& g, const RangeMap& ranges,
                           std::size_t n_samples, uint64_t seed, double eps) {
  VerifyReport report;
  report.samples = n_samples;
  report.seed = seed;
  std::mt19937_64 rng(seed);
  for (std::size_t s = 0; s < n_samples; ++s) {
    const TensorMap values = run_all(g, sample_inputs(g, ranges, rng));
    for (const auto& [name, v] : values) {
      auto it = ranges.find(name);
      if (it == ranges.end()) continue;
      const Interval& box = it->second.range;
      if (box.contains(v, eps)) continue;
      for (std::size_t i = 0; i < v.size(); ++i) {
        const double l = box.lo()[i];
        const double h = box.hi()[i];
        if (v[i] >= l - eps * std::max(1.0, std::abs(l)) &&
            v[i] <= h + eps * std::max(1.0, std::abs(h))) {
          continue;
        }
        ++report.violation_count;
        if (report.violations.size() < kMaxRecordedViolations) {
          report.violations.push_back({name, s, i, v[i], l, h});
        }
      }
    }
    report.trace.record(values);
  }
  for (const auto& [name, obs] : report.trace.observed) {
    if (g.is_constant(name)) continue;
    auto it = ranges.find(name);
    if (it == ranges.end()) continue;
    const Interval& box = it->second.range;
    TensorSlack slack;
    double total = 0.0;
    for (std::size_t i = 0; i < obs.size(); ++i) {
      const double d = (box.hi()[i] - box.lo()[i]) - (obs.hi()[i] - obs.lo()[i]);
      slack.max_slack = std::max(slack.max_slack, d);
      total += d;
    }
    slack.mean_slack = obs.size() ? total / static_cast<double>(obs.size()) : 0.0;
    report.slack[name] = slack;
  }
  report.stuck_channels = stuck_channels(g, ranges);
  if (!report.ok()) {
    log::warn("range verification found ", report.violation_count,
              " containment violations");
  }
  return report;
}

}  // namespace qrange
