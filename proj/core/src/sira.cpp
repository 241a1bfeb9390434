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

#include "qrange/sira.hpp"

#include <cmath>

#include "qrange/error.hpp"
#include "qrange/log.hpp"

namespace qrange {
namespace {

constexpr double kRatioTolerance = 1e-6;
constexpr double kTieTolerance = 1e-9;

// Value of `a` broadcast to `shape` and collapsed along `axis`, if `a` is
// constant along that axis.
std::optional<NdArray> collapse_axis(const NdArray& a, const Shape& shape,
                                     std::size_t axis) {
  const NdArray full = a.broadcast_to(shape);
  int64_t inner = 1;
  for (std::size_t i = axis + 1; i < shape.size(); ++i) inner *= shape[i];
  const int64_t dim = shape[axis];
  for (std::size_t flat = 0; flat < full.size(); ++flat) {
    const auto f = static_cast<int64_t>(flat);
    const int64_t coord = (f / inner) % dim;
    if (full[flat] != full[static_cast<std::size_t>(f - coord * inner)]) {
      return std::nullopt;
    }
  }
  return slice_axis(full, static_cast<int64_t>(axis), 0);
}

ContributorMap merge(ContributorMap a, const ContributorMap& b) {
  for (const auto& [name, role] : b) {
    auto [it, inserted] = a.emplace(name, role);
    if (!inserted && role == ContributionRole::scale) it->second = role;
  }
  return a;
}

ContributorMap with(ContributorMap m, const std::string& name,
                    ContributionRole role) {
  return merge(std::move(m), {{name, role}});
}

ScaledIntRange interval_fallback(ElementwiseFn f, const Operand& a,
                                 const Operand& b) {
  return ScaledIntRange::from_interval(
      monotonic_propagate(f, a.range.range, b.range.range));
}

bool is_integer_ratio(const NdArray& ratio, NdArray* rounded) {
  for (double k : ratio.values()) {
    if (!std::isfinite(k)) return false;
    if (std::abs(k - std::nearbyint(k)) >
        kRatioTolerance * std::max(1.0, std::abs(k))) {
      return false;
    }
  }
  *rounded = map(ratio, [](double k) { return std::nearbyint(k); });
  return true;
}

// Splits a binary operand pair into (data, parameter) following the
// convention that a graph initializer is the parameter; with two
// initializers the second input is the parameter.
bool split_param(const Operand& a, const Operand& b, const Operand** data,
                 const Operand** param) {
  if (b.is_param) {
    *data = &a;
    *param = &b;
    return true;
  }
  if (a.is_param) {
    *data = &b;
    *param = &a;
    return true;
  }
  return false;
}

ScaledIntRange negated(const ScaledIntRange& r) {
  const auto neg = [](double v) { return -v; };
  if (r.is_scaled_int()) {
    return ScaledIntRange::from_scaled_int(*r.int_range, map(*r.scale, neg),
                                           map(*r.bias, neg), r.contributors);
  }
  auto out = ScaledIntRange::from_interval(
      Interval(map(r.range.hi(), neg), map(r.range.lo(), neg)));
  out.contributors = r.contributors;
  return out;
}

// Rounds x = v / s + z for a quantizer bound. Values within a hair of a
// rounding tie go outward so the bound also covers the neighbouring
// floating-point results of the concrete computation.
double quant_bound(double v, double s, double z, double qmin, double qmax,
                   bool lower) {
  const double t = v / s + z;
  const double frac = t - std::floor(t);
  if (std::abs(frac - 0.5) < kTieTolerance * std::max(1.0, std::abs(t))) {
    return std::clamp(lower ? std::floor(t) : std::ceil(t), qmin, qmax);
  }
  return quantize_code(v, s, z, qmin, qmax);
}

const NdArray& point_value(const Operand& op, const char* what) {
  if (!op.is_param || !op.range.range.is_point()) {
    throw AnalysisError(std::string(what) + " '" + op.name +
                        "' must be a constant initializer");
  }
  return op.range.range.lo();
}

}  // namespace

ScaledIntRange handle_quant(const ScaledIntRange& in, const QuantSpec& spec,
                            const Operand& scale, const Operand& zero_point) {
  const NdArray& s = point_value(scale, "quantizer scale");
  const NdArray& z = point_value(zero_point, "quantizer zero-point");
  for (double v : s.values()) {
    if (!(v > 0.0)) {
      throw AnalysisError("quantizer scale '" + scale.name +
                          "' must be strictly positive");
    }
  }
  const auto qmin = static_cast<double>(spec.qmin());
  const auto qmax = static_cast<double>(spec.qmax());
  const NdArray lo = map(in.range.lo(), s, z, [&](double v, double sv, double zv) {
    return quant_bound(v, sv, zv, qmin, qmax, true);
  });
  const NdArray hi = map(in.range.hi(), s, z, [&](double v, double sv, double zv) {
    return quant_bound(v, sv, zv, qmin, qmax, false);
  });
  const NdArray bias = map(s, z, [](double sv, double zv) { return -sv * zv; });
  return ScaledIntRange::from_scaled_int(
      Interval(lo, hi), s, bias,
      {{scale.name, ContributionRole::scale},
       {zero_point.name, ContributionRole::bias}});
}

ScaledIntRange handle_add(const Operand& a, const Operand& b) {
  const Operand* data = nullptr;
  const Operand* param = nullptr;
  if (split_param(a, b, &data, &param)) {
    const auto view = scaled_int_view(data->range);
    if (view && param->range.range.is_point()) {
      const NdArray bias = map(*view->bias, param->range.range.lo(),
                               [](double x, double c) { return x + c; });
      return ScaledIntRange::from_scaled_int(
          *view->int_range, *view->scale, bias,
          with(view->contributors, param->name, ContributionRole::bias));
    }
    return interval_fallback(ElementwiseFn::add, a, b);
  }
  const auto va = scaled_int_view(a.range);
  const auto vb = scaled_int_view(b.range);
  if (va && vb) {
    for (int dir = 0; dir < 2; ++dir) {
      const ScaledIntRange& base = dir == 0 ? *va : *vb;
      const ScaledIntRange& other = dir == 0 ? *vb : *va;
      if (std::any_of(base.scale->values().begin(), base.scale->values().end(),
                      [](double v) { return v == 0.0; })) {
        continue;
      }
      NdArray k;
      const NdArray ratio =
          map(*other.scale, *base.scale, [](double x, double y) { return x / y; });
      if (!is_integer_ratio(ratio, &k)) continue;
      const Interval scaled =
          monotonic_propagate(ElementwiseFn::mul, Interval::point(k), *other.int_range);
      const Interval ints =
          monotonic_propagate(ElementwiseFn::add, *base.int_range, scaled);
      const NdArray bias =
          map(*base.bias, *other.bias, [](double x, double y) { return x + y; });
      return ScaledIntRange::from_scaled_int(
          ints, *base.scale, bias, merge(base.contributors, other.contributors));
    }
  }
  return interval_fallback(ElementwiseFn::add, a, b);
}

ScaledIntRange handle_sub(const Operand& a, const Operand& b) {
  const ScaledIntRange neg_b = negated(b.range);
  const Operand nb{b.name, neg_b, b.is_param};
  auto out = handle_add(a, nb);
  if (!out.is_scaled_int()) {
    auto plain = interval_fallback(ElementwiseFn::sub, a, b);
    plain.contributors = out.contributors;
    return plain;
  }
  return out;
}

namespace {

ScaledIntRange scale_by_param(const Operand& a, const Operand& b,
                              ElementwiseFn f) {
  const Operand* data = nullptr;
  const Operand* param = nullptr;
  const bool param_rhs = split_param(a, b, &data, &param) &&
                         (f == ElementwiseFn::mul || param == &b);
  if (param_rhs) {
    const auto view = scaled_int_view(data->range);
    if (view && param->range.range.is_point()) {
      const NdArray& c = param->range.range.lo();
      const auto op = [f](double x, double y) { return apply(f, x, y); };
      return ScaledIntRange::from_scaled_int(
          *view->int_range, map(*view->scale, c, op), map(*view->bias, c, op),
          with(view->contributors, param->name, ContributionRole::scale));
    }
  }
  return interval_fallback(f, a, b);
}

}  // namespace

ScaledIntRange handle_mul(const Operand& a, const Operand& b) {
  return scale_by_param(a, b, ElementwiseFn::mul);
}

ScaledIntRange handle_div(const Operand& a, const Operand& b) {
  if (b.is_param) {
    for (double v : b.range.range.lo().values()) {
      if (v == 0.0) {
        throw AnalysisError("division by constant '" + b.name +
                            "' containing zero");
      }
    }
  }
  return scale_by_param(a, b, ElementwiseFn::div);
}

namespace {

struct IntOperand {
  Interval ints;
  NdArray scale;
  NdArray bias;
  NdArray real;  // point value for weights
  ContributorMap contributors;
};

// Weight operand: constant integer component with zero bias.
std::optional<IntOperand> weight_view(const Operand& w) {
  if (!w.range.range.is_point()) return std::nullopt;
  const auto v = scaled_int_view(w.range);
  if (!v || !all_equal_to(*v->bias, 0.0)) return std::nullopt;
  return IntOperand{*v->int_range, *v->scale, *v->bias, w.range.range.lo(),
                    v->contributors};
}

std::optional<IntOperand> data_view(const Operand& x) {
  const auto v = scaled_int_view(x.range);
  if (!v) return std::nullopt;
  return IntOperand{*v->int_range, *v->scale, *v->bias, x.range.range.lo(),
                    v->contributors};
}

NdArray point_matmul(const NdArray& a, const NdArray& b) {
  return interval_matmul(Interval::point(a), Interval::point(b)).lo();
}

}  // namespace

ScaledIntRange handle_matmul(const Operand& a, const Operand& b) {
  const Shape& as = a.range.shape();
  const Shape& bs = b.range.shape();
  if (bs.size() == 2 && !as.empty()) {
    const auto w = weight_view(b);
    const auto x = data_view(a);
    if (w && x) {
      const auto sw = collapse_axis(w->scale, bs, 0);
      const auto sx = collapse_axis(x->scale, as, as.size() - 1);
      if (sw && sx) {
        const Interval ints = interval_matmul(x->ints, w->ints);
        const NdArray scale =
            compact(map(*sx, *sw, [](double p, double q) { return p * q; }));
        const NdArray bias = point_matmul(x->bias.broadcast_to(as), w->real);
        return ScaledIntRange::from_scaled_int(
            ints, scale, bias, merge(x->contributors, w->contributors));
      }
    }
    if (as.size() == 2) {
      const auto wl = weight_view(a);
      const auto xr = data_view(b);
      if (wl && xr) {
        const auto sw = collapse_axis(wl->scale, as, 1);
        const auto sx = collapse_axis(xr->scale, bs, 0);
        if (sw && sx) {
          const Interval ints = interval_matmul(wl->ints, xr->ints);
          const NdArray scale =
              map(*sw, *sx, [](double p, double q) { return p * q; });
          const NdArray bias = point_matmul(wl->real, xr->bias.broadcast_to(bs));
          return ScaledIntRange::from_scaled_int(
              ints, scale, bias, merge(xr->contributors, wl->contributors));
        }
      }
    }
  }
  log::debug("matmul falls back to interval propagation");
  return ScaledIntRange::from_interval(
      interval_matmul(a.range.range, b.range.range));
}

ScaledIntRange handle_conv(const Operand& x, const Operand& w,
                           const ConvAttrs& attrs) {
  const Shape& xs = x.range.shape();
  const Shape& ws = w.range.shape();
  const ConvGeometry geo = conv_geometry(xs, ws, attrs);
  const auto wv = weight_view(w);
  const auto xv = data_view(x);
  if (wv && xv) {
    std::optional<NdArray> sw = wv->scale.broadcast_to(ws);
    for (std::size_t axis = 1; sw && axis < 4; ++axis) {
      sw = collapse_axis(*sw, sw->shape(), axis);
    }
    std::optional<NdArray> sx = xv->scale.broadcast_to(xs);
    for (std::size_t axis : {0u, 2u, 3u}) {
      if (sx) sx = collapse_axis(*sx, sx->shape(), axis);
    }
    bool ok = sw && sx;
    std::vector<double> out_scale(static_cast<std::size_t>(geo.out_channels));
    if (ok) {
      const int64_t cin_g = geo.in_per_group();
      for (int64_t g = 0; ok && g < geo.group; ++g) {
        for (int64_t c = 1; c < cin_g; ++c) {
          if ((*sx)[g * cin_g + c] != (*sx)[g * cin_g]) ok = false;
        }
      }
      for (int64_t co = 0; ok && co < geo.out_channels; ++co) {
        const int64_t g = co / geo.out_per_group();
        out_scale[co] = (*sw)[co] * (*sx)[g * cin_g];
      }
    }
    if (ok) {
      const Interval ints = interval_conv(xv->ints, wv->ints, geo);
      const NdArray bias =
          interval_conv(Interval::point(xv->bias.broadcast_to(xs)),
                        Interval::point(wv->real), geo)
              .lo();
      return ScaledIntRange::from_scaled_int(
          ints, NdArray({geo.out_channels, 1, 1}, out_scale), bias,
          merge(xv->contributors, wv->contributors));
    }
  }
  log::debug("conv falls back to interval propagation");
  return ScaledIntRange::from_interval(
      interval_conv(x.range.range, w.range.range, geo));
}

ScaledIntRange handle_monotonic_activation(const ScaledIntRange& in,
                                           ElementwiseFn f) {
  return ScaledIntRange::from_interval(monotonic_propagate(f, in.range));
}

ScaledIntRange handle_multithreshold(const ScaledIntRange& in,
                                     const Operand& thresholds,
                                     const MultiThresholdAttrs& attrs) {
  const Shape& shape = in.shape();
  const Shape& ts = thresholds.range.shape();
  if (ts.size() != 2) {
    throw AnalysisError("threshold tensor '" + thresholds.name +
                        "' must have shape CxN");
  }
  const auto channels = channel_of_elements(shape);
  const int64_t c_dim = shape.empty() ? 1 : shape[channel_axis(shape)];
  if (ts[0] != 1 && ts[0] != c_dim) {
    throw AnalysisError("threshold tensor '" + thresholds.name + "' has " +
                        std::to_string(ts[0]) + " rows for " +
                        std::to_string(c_dim) + " channels");
  }
  if (attrs.bias.size() != 1 &&
      static_cast<int64_t>(attrs.bias.size()) != c_dim) {
    throw AnalysisError("multi-threshold bias must have 1 or C entries");
  }
  const int64_t n = ts[1];
  const auto& tlo = thresholds.range.range.lo();
  const auto& thi = thresholds.range.range.hi();
  const bool integer_bias = std::all_of(
      attrs.bias.begin(), attrs.bias.end(),
      [](double b) { return std::abs(b - std::nearbyint(b)) < kIntegerTolerance; });
  std::vector<double> lo(in.range.size()), hi(in.range.size());
  for (std::size_t e = 0; e < lo.size(); ++e) {
    const int64_t c = channels[e];
    const int64_t row = ts[0] == 1 ? 0 : c;
    const double b = attrs.bias.size() == 1 ? attrs.bias[0] : attrs.bias[c];
    int64_t count_lo = 0, count_hi = 0;
    for (int64_t i = 0; i < n; ++i) {
      count_lo += in.range.lo()[e] >= thi[row * n + i];
      count_hi += in.range.hi()[e] >= tlo[row * n + i];
    }
    const double offset = integer_bias ? std::nearbyint(b) : 0.0;
    lo[e] = offset + static_cast<double>(count_lo);
    hi[e] = offset + static_cast<double>(count_hi);
  }
  NdArray bias = NdArray::scalar(0.0);
  if (!integer_bias) {
    Shape bshape(shape.size(), 1);
    if (!shape.empty()) bshape[channel_axis(shape)] = c_dim;
    bias = NdArray::vector(attrs.bias.size() == 1
                               ? std::vector<double>(c_dim, attrs.bias[0])
                               : attrs.bias)
               .reshaped(bshape);
  }
  return ScaledIntRange::from_scaled_int(
      Interval(NdArray(shape, std::move(lo)), NdArray(shape, std::move(hi))),
      NdArray::scalar(1.0), bias);
}

ScaledIntRange propagate_node(const Graph& g, const Node& node,
                              const RangeMap& ranges) {
  auto operand = [&](std::size_t i) {
    const auto& name = node.inputs.at(i);
    auto it = ranges.find(name);
    if (it == ranges.end()) {
      throw AnalysisError("no range for tensor '" + name + "' consumed by '" +
                          node.name + "'");
    }
    return Operand{name, it->second, g.is_constant(name)};
  };
  switch (node.op) {
    case OpType::Quant:
      return handle_quant(operand(0).range, node.quant(), operand(1), operand(2));
    case OpType::Add:
      return handle_add(operand(0), operand(1));
    case OpType::Sub:
      return handle_sub(operand(0), operand(1));
    case OpType::Mul:
      return handle_mul(operand(0), operand(1));
    case OpType::Div:
      return handle_div(operand(0), operand(1));
    case OpType::MatMul:
      return handle_matmul(operand(0), operand(1));
    case OpType::Conv:
      if (node.inputs.size() == 3) {
        throw AnalysisError("Conv '" + node.name +
                            "' carries a bias input; lower the graph first");
      }
      return handle_conv(operand(0), operand(1), node.conv());
    case OpType::Relu:
      return handle_monotonic_activation(operand(0).range, ElementwiseFn::relu);
    case OpType::MultiThreshold:
      return handle_multithreshold(operand(0).range, operand(1),
                                   node.multithreshold());
    case OpType::Gemm:
    case OpType::BatchNormalization:
      throw AnalysisError("unsupported operator " +
                          std::string(to_string(node.op)) + " at node '" +
                          node.name + "'; lower the graph first");
  }
  throw AnalysisError("unsupported operator at node '" + node.name + "'");
}

RangeMap analyze(const Graph& g, const RangeMap& input_ranges) {
  RangeMap ranges;
  for (const auto& t : g.tensors()) {
    if (t.is_constant()) {
      ranges.emplace(t.name,
                     ScaledIntRange::from_interval(Interval::point(*t.data)));
    }
  }
  for (const auto& name : g.inputs()) {
    auto it = input_ranges.find(name);
    if (it == input_ranges.end()) {
      throw AnalysisError("missing input range for graph input '" + name + "'");
    }
    ScaledIntRange r = it->second;
    const Shape& shape = g.tensor(name).shape;
    if (r.shape() != shape) {
      try {
        if (r.is_scaled_int()) {
          r = ScaledIntRange::from_scaled_int(r.int_range->broadcast_to(shape),
                                              *r.scale, *r.bias, r.contributors);
        } else {
          r.range = r.range.broadcast_to(shape);
        }
      } catch (const ShapeError&) {
        throw AnalysisError("range for input '" + name + "' has shape " +
                            shape_to_string(r.shape()) +
                            ", which does not broadcast to " +
                            shape_to_string(shape));
      }
    }
    r.check();
    ranges[name] = std::move(r);
  }
  for (const auto& [name, r] : input_ranges) {
    if (!g.is_graph_input(name)) {
      log::warn("ignoring range for '", name, "', which is not a graph input");
    }
  }
  for (auto idx : topo_sort(g)) {
    const Node& node = g.nodes()[idx];
    ScaledIntRange out = propagate_node(g, node, ranges);
    const Shape& shape = g.tensor(node.outputs[0]).shape;
    if (out.shape() != shape) {
      throw AnalysisError("range of '" + node.outputs[0] + "' has shape " +
                          shape_to_string(out.shape()) + ", expected " +
                          shape_to_string(shape));
    }
    out.check();
    log::debug("range ", node.outputs[0], " computed by ", node.name);
    ranges[node.outputs[0]] = std::move(out);
  }
  return ranges;
}

std::map<std::string, std::vector<int64_t>> stuck_channels(
    const Graph& g, const RangeMap& ranges) {
  std::map<std::string, std::vector<int64_t>> out;
  for (const auto& [name, r] : ranges) {
    if (!g.has_tensor(name) || g.is_constant(name)) continue;
    const Shape& shape = r.shape();
    if (shape.empty()) continue;
    const int64_t dim = shape[channel_axis(shape)];
    const auto channels = channel_of_elements(shape);
    std::vector<bool> point(static_cast<std::size_t>(dim), true);
    for (std::size_t e = 0; e < channels.size(); ++e) {
      if (r.range.lo()[e] != r.range.hi()[e]) point[channels[e]] = false;
    }
    std::vector<int64_t> stuck;
    for (int64_t c = 0; c < dim; ++c) {
      if (point[c]) stuck.push_back(c);
    }
    if (!stuck.empty()) out.emplace(name, std::move(stuck));
  }
  return out;
}

}  // namespace qrange
