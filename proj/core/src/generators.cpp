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

#include "qrange/generators.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace qrange {

namespace {

class Builder {
 public:
  explicit Builder(Graph& g) : g_(g) {}

  std::string constant(const std::string& name, NdArray data) {
    const std::string n = g_.unique_tensor_name(name);
    g_.add_constant(n, std::move(data));
    return n;
  }

  std::string node(OpType op, const std::string& name,
                   std::vector<std::string> inputs, NodeAttrs attrs = {},
                   std::string output = {}) {
    if (output.empty()) output = g_.unique_tensor_name(name);
    g_.add_node({g_.unique_node_name(name), op, std::move(inputs), {output},
                 std::move(attrs)});
    return output;
  }

  std::string quant(const std::string& x, const std::string& name,
                    NdArray scale, NdArray zero, QuantSpec spec,
                    std::string output = {}) {
    const std::string s = constant(name + "_scale", std::move(scale));
    const std::string z = constant(name + "_zero", std::move(zero));
    return node(OpType::Quant, name, {x, s, z}, spec, std::move(output));
  }

 private:
  Graph& g_;
};

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

int64_t uniform_int(std::mt19937_64& rng, int64_t lo, int64_t hi) {
  return std::uniform_int_distribution<int64_t>(lo, hi)(rng);
}

bool coin(std::mt19937_64& rng, double p = 0.5) {
  return std::bernoulli_distribution(p)(rng);
}

NdArray random_array(std::mt19937_64& rng, Shape shape, double lo,
                     double hi) {
  std::vector<double> v(static_cast<std::size_t>(num_elements(shape)));
  for (double& x : v) x = uniform(rng, lo, hi);
  return NdArray(std::move(shape), std::move(v));
}

QuantSpec random_spec(std::mt19937_64& rng, int lo_bits, int hi_bits,
                      bool is_signed) {
  QuantSpec q;
  q.bitwidth = static_cast<int>(uniform_int(rng, lo_bits, hi_bits));
  q.is_signed = is_signed;
  q.narrow = is_signed && coin(rng, 0.3);
  return q;
}

// Per-output-channel scales making max |w| land on the largest code.
NdArray weight_scales(const NdArray& w, int64_t out_axis, const QuantSpec& q) {
  const Shape& shape = w.shape();
  const int64_t channels = shape[static_cast<std::size_t>(out_axis)];
  std::vector<double> s(static_cast<std::size_t>(channels), 0.0);
  int64_t inner = 1;
  for (std::size_t d = static_cast<std::size_t>(out_axis) + 1; d < shape.size();
       ++d) {
    inner *= shape[d];
  }
  for (std::size_t i = 0; i < w.size(); ++i) {
    const auto c = static_cast<std::size_t>((static_cast<int64_t>(i) / inner) %
                                            channels);
    s[c] = std::max(s[c], std::abs(w[i]));
  }
  for (double& v : s) v = v > 0.0 ? v / static_cast<double>(q.qmax()) : 1.0;
  Shape sshape(shape.size(), 1);
  sshape[static_cast<std::size_t>(out_axis)] = channels;
  return NdArray(std::move(sshape), std::move(s));
}

double activation_zero(std::mt19937_64& rng, const QuantSpec& q) {
  if (!coin(rng, 0.3)) return 0.0;
  return static_cast<double>(
      q.is_signed ? uniform_int(rng, -2, 2) : uniform_int(rng, 0, 2));
}

}  // namespace

Graph worked_example_graph() {
  Graph g;
  Builder b(g);
  g.add_input("X", {1, 2});
  g.add_constant("W", NdArray({2, 3}, {-2.1, 5.0, -1.3, 3.1, 0.0, -3.2}));
  const QuantSpec s4{4, true, false};
  const QuantSpec u4{4, false, false};
  b.quant("W", "quant_w", NdArray::vector({0.2, 0.3, 0.1}),
          NdArray::scalar(0.0), s4, "qW");
  b.quant("X", "quant_x", NdArray::scalar(0.7), NdArray::scalar(0.0), s4,
          "qX");
  g.add_constant("B", NdArray::vector({-3.3, -5.2, -6.1}));
  b.node(OpType::Gemm, "gemm", {"qX", "qW", "B"}, {}, "mm_b");
  g.add_constant("gamma", NdArray::vector({0.6, 0.2, 0.4}));
  g.add_constant("beta", NdArray::vector({-0.2, -0.4, 1.1}));
  g.add_constant("mean", NdArray::vector({0.0, 0.0, 0.0}));
  g.add_constant("var", NdArray::vector({1.0, 1.0, 1.0}));
  b.node(OpType::BatchNormalization, "bn",
         {"mm_b", "gamma", "beta", "mean", "var"}, BatchNormAttrs{0.0},
         "bn_n");
  b.node(OpType::Relu, "relu", {"bn_n"}, {}, "r");
  b.quant("r", "quant_y", NdArray::scalar(0.1), NdArray::scalar(0.0), u4,
          "qy");
  g.set_outputs({"qy"});
  g.validate();
  return g;
}

Graph worked_example_lowered() {
  Graph g;
  Builder b(g);
  g.add_input("X", {1, 2});
  g.add_constant("W", NdArray({2, 3}, {-2.1, 5.0, -1.3, 3.1, 0.0, -3.2}));
  const QuantSpec s4{4, true, false};
  const QuantSpec u4{4, false, false};
  b.quant("W", "quant_w", NdArray::vector({0.2, 0.3, 0.1}),
          NdArray::scalar(0.0), s4, "qW");
  b.quant("X", "quant_x", NdArray::scalar(0.7), NdArray::scalar(0.0), s4,
          "qX");
  b.node(OpType::MatMul, "matmul", {"qX", "qW"}, {}, "mm");
  g.add_constant("B", NdArray::vector({-3.3, -5.2, -6.1}));
  b.node(OpType::Add, "add_b", {"mm", "B"}, {}, "mm_b");
  g.add_constant("M", NdArray::vector({0.6, 0.2, 0.4}));
  b.node(OpType::Mul, "bn_mul", {"mm_b", "M"}, {}, "bn_m");
  g.add_constant("N", NdArray::vector({-0.2, -0.4, 1.1}));
  b.node(OpType::Add, "bn_add", {"bn_m", "N"}, {}, "bn_n");
  b.node(OpType::Relu, "relu", {"bn_n"}, {}, "r");
  b.quant("r", "quant_y", NdArray::scalar(0.1), NdArray::scalar(0.0), u4,
          "qy");
  g.set_outputs({"qy"});
  g.validate();
  return g;
}

RangeMap worked_example_input_ranges() {
  RangeMap r;
  r.emplace("X", ScaledIntRange::from_interval(
                     Interval(NdArray({1, 2}, {-5.1, -3.8}),
                              NdArray({1, 2}, {5.1, 3.8}))));
  return r;
}

RangedGraph accumulator_example() {
  RangedGraph out;
  Graph& g = out.graph;
  Builder b(g);
  g.add_input("X", {1, 2});
  g.add_constant("X_scale", NdArray::scalar(0.7));
  b.node(OpType::Div, "quant_x_prescale", {"X", "X_scale"}, {}, "X_prescaled");
  b.quant("X_prescaled", "quant_x", NdArray::scalar(1.0), NdArray::scalar(0.0),
          QuantSpec{4, true, false}, "X_int");
  g.add_constant("W_int", NdArray({2, 3}, {-8, 7, -8, 7, 0, -8}));
  b.node(OpType::MatMul, "matmul", {"X_int", "W_int"}, {}, "mm");
  const std::vector<double> sw{0.2, 0.3, 0.1}, bb{-3.3, -5.2, -6.1},
      m{0.6, 0.2, 0.4}, n{-0.2, -0.4, 1.1};
  std::vector<double> scale(3), bias(3);
  for (std::size_t i = 0; i < 3; ++i) {
    scale[i] = 0.7 * sw[i] * m[i];
    bias[i] = bb[i] * m[i] + n[i];
  }
  g.add_constant("mm_aggr_scale", NdArray::vector(scale));
  b.node(OpType::Mul, "mm_aggr_mul", {"mm", "mm_aggr_scale"}, {}, "mm_scaled");
  g.add_constant("mm_aggr_bias", NdArray::vector(bias));
  b.node(OpType::Add, "mm_aggr_add", {"mm_scaled", "mm_aggr_bias"}, {}, "bn_n");
  b.node(OpType::Relu, "relu", {"bn_n"}, {}, "r");
  b.quant("r", "quant_y", NdArray::scalar(0.1), NdArray::scalar(0.0),
          QuantSpec{4, false, false}, "qy");
  g.set_outputs({"qy"});
  g.validate();
  out.input_ranges = worked_example_input_ranges();
  return out;
}

RangeMap uniform_input_ranges(const Graph& g, double lo, double hi) {
  RangeMap r;
  for (const auto& name : g.inputs()) {
    r.emplace(name, ScaledIntRange::from_interval(
                        Interval::uniform(g.tensor(name).shape, lo, hi)));
  }
  return r;
}

RangedGraph random_mlp(std::mt19937_64& rng, const MlpOptions& opts) {
  RangedGraph out;
  Graph& g = out.graph;
  Builder b(g);
  int64_t width = uniform_int(rng, 2, opts.max_width);
  g.add_input("X", {1, width});
  const double in_mag = uniform(rng, 0.5, 4.0);
  const bool in_signed = coin(rng, 0.7);
  {
    const NdArray lo = in_signed ? random_array(rng, {1, width}, -in_mag, 0.0)
                                 : NdArray::full({1, width}, 0.0);
    const NdArray hi = random_array(rng, {1, width}, 0.1, in_mag);
    out.input_ranges.emplace(
        "X", ScaledIntRange::from_interval(Interval(lo, hi)));
  }
  QuantSpec qin = random_spec(rng, 4, 8, in_signed);
  std::string x = b.quant(
      "X", "quant_in",
      NdArray::scalar(in_mag / static_cast<double>(qin.qmax())),
      NdArray::scalar(activation_zero(rng, qin)), qin);

  const int layers = static_cast<int>(
      uniform_int(rng, opts.min_layers, opts.max_layers));
  for (int l = 0; l < layers; ++l) {
    const std::string tag = "l" + std::to_string(l);
    const int64_t next = uniform_int(rng, 1, opts.max_width);
    const NdArray w = random_array(rng, {width, next}, -1.0, 1.0);
    const std::string wname = b.constant(tag + "_w", w);
    const QuantSpec qw = random_spec(rng, 2, 8, true);
    const NdArray sw = weight_scales(w, 1, qw);
    const std::string wq =
        b.quant(wname, tag + "_quant_w", sw, NdArray::scalar(0.0), qw);
    const std::string bias =
        b.constant(tag + "_bias", random_array(rng, {next}, -1.0, 1.0));
    std::string y;
    if (opts.allow_gemm && coin(rng)) {
      y = b.node(OpType::Gemm, tag + "_gemm", {x, wq, bias});
    } else {
      y = b.node(OpType::MatMul, tag + "_matmul", {x, wq});
      y = b.node(OpType::Add, tag + "_add_bias", {y, bias});
    }
    if (opts.allow_batchnorm && coin(rng)) {
      const std::string gamma =
          b.constant(tag + "_gamma", random_array(rng, {next}, 0.2, 1.5));
      const std::string beta =
          b.constant(tag + "_beta", random_array(rng, {next}, -0.5, 0.5));
      const std::string mean =
          b.constant(tag + "_mean", random_array(rng, {next}, -0.5, 0.5));
      const std::string var =
          b.constant(tag + "_var", random_array(rng, {next}, 0.5, 2.0));
      y = b.node(OpType::BatchNormalization, tag + "_bn",
                 {y, gamma, beta, mean, var}, BatchNormAttrs{});
    }
    const bool relu = coin(rng, 0.75);
    if (relu) y = b.node(OpType::Relu, tag + "_relu", {y});
    const QuantSpec qa = random_spec(rng, 2, 8, !relu);
    const double sa = uniform(rng, 0.5, 4.0) / static_cast<double>(qa.qmax());
    x = b.quant(y, tag + "_quant_act", NdArray::scalar(sa),
                NdArray::scalar(activation_zero(rng, qa)), qa);
    width = next;
  }
  g.set_outputs({x});
  g.validate();
  return out;
}

RangedGraph random_cnn(std::mt19937_64& rng) {
  RangedGraph out;
  Graph& g = out.graph;
  Builder b(g);
  const int64_t cin = uniform_int(rng, 1, 3);
  const int64_t hw = uniform_int(rng, 4, 6);
  const int64_t c = uniform_int(rng, 2, 4);
  g.add_input("X", {1, cin, hw, hw});
  out.input_ranges = uniform_input_ranges(g, -1.0, 1.0);
  const QuantSpec qin = random_spec(rng, 4, 8, true);
  std::string x = b.quant(
      "X", "quant_in", NdArray::scalar(1.0 / static_cast<double>(qin.qmax())),
      NdArray::scalar(0.0), qin);

  // Standard conv with bias and padding, then BatchNormalization.
  const NdArray w1 = random_array(rng, {c, cin, 3, 3}, -1.0, 1.0);
  const QuantSpec qw1 = random_spec(rng, 3, 8, true);
  const std::string w1q = b.quant(b.constant("conv1_w", w1), "conv1_quant_w",
                                  weight_scales(w1, 0, qw1),
                                  NdArray::scalar(0.0), qw1);
  const std::string b1 =
      b.constant("conv1_b", random_array(rng, {c}, -0.5, 0.5));
  ConvAttrs a1;
  const int64_t pad = coin(rng) ? 1 : 0;
  a1.pad = {pad, pad, pad, pad};
  std::string y = b.node(OpType::Conv, "conv1", {x, w1q, b1}, a1);
  if (coin(rng)) {
    y = b.node(OpType::BatchNormalization, "bn1",
               {y, b.constant("bn1_gamma", random_array(rng, {c}, 0.2, 1.5)),
                b.constant("bn1_beta", random_array(rng, {c}, -0.5, 0.5)),
                b.constant("bn1_mean", random_array(rng, {c}, -0.5, 0.5)),
                b.constant("bn1_var", random_array(rng, {c}, 0.5, 2.0))},
               BatchNormAttrs{});
  }
  y = b.node(OpType::Relu, "relu1", {y});

  // Activation scale shared by both residual branches.
  const QuantSpec qa = random_spec(rng, 3, 8, false);
  const NdArray sa =
      coin(rng) ? random_array(rng, {1, c, 1, 1}, 0.5 / qa.qmax(),
                               6.0 / qa.qmax())
                : NdArray::scalar(uniform(rng, 0.5, 6.0) / qa.qmax());
  const std::string a = b.quant(y, "quant_a1", sa, NdArray::scalar(0.0), qa);

  // Depthwise conv keeps the spatial size so the residual shapes agree.
  const NdArray wd = random_array(rng, {c, 1, 3, 3}, -1.0, 1.0);
  const QuantSpec qwd = random_spec(rng, 3, 8, true);
  const std::string wdq = b.quant(b.constant("dw_w", wd), "dw_quant_w",
                                  weight_scales(wd, 0, qwd),
                                  NdArray::scalar(0.0), qwd);
  ConvAttrs ad;
  ad.pad = {1, 1, 1, 1};
  ad.group = c;
  std::string d = b.node(OpType::Conv, "dwconv", {a, wdq}, ad);
  d = b.node(OpType::Relu, "relu2", {d});
  d = b.quant(d, "quant_a2", sa, NdArray::scalar(0.0), qa);

  const std::string res = b.node(OpType::Add, "residual", {a, d});
  const QuantSpec qo = random_spec(rng, 4, 8, false);
  const std::string o =
      b.quant(res, "quant_out",
              NdArray::scalar(uniform(rng, 1.0, 10.0) / qo.qmax()),
              NdArray::scalar(0.0), qo);
  g.set_outputs({o});
  g.validate();
  return out;
}

RangedGraph random_tail(std::mt19937_64& rng, const TailOptions& opts) {
  RangedGraph out;
  Graph& g = out.graph;
  Builder b(g);
  const int64_t c = opts.channels;
  g.add_input("acc", {1, c});
  std::vector<double> lo(static_cast<std::size_t>(c)),
      hi(static_cast<std::size_t>(c));
  for (std::size_t i = 0; i < lo.size(); ++i) {
    const int64_t span = uniform_int(rng, 1, opts.max_domain - 1);
    const int64_t start = uniform_int(rng, -span, 0);
    lo[i] = static_cast<double>(start);
    hi[i] = static_cast<double>(start + span);
  }
  out.input_ranges.emplace(
      "acc", ScaledIntRange::from_scaled_int(
                 Interval(NdArray({1, c}, lo), NdArray({1, c}, hi)),
                 NdArray::scalar(1.0), NdArray::scalar(0.0)));

  const QuantSpec q =
      random_spec(rng, opts.out_bits, opts.out_bits, coin(rng));
  const double levels = static_cast<double>(q.qmax() - q.qmin());
  const double sq = uniform(rng, 0.05, 1.0);
  std::vector<double> scale(lo.size()), bias(lo.size());
  for (std::size_t i = 0; i < lo.size(); ++i) {
    // Spread the output codes over a random fraction of the domain.
    const double span = hi[i] - lo[i];
    scale[i] = uniform(rng, 0.5, 3.0) * levels * sq / span;
    bias[i] = -scale[i] * uniform(rng, lo[i], hi[i]);
  }
  std::string y = b.node(
      OpType::Mul, "tail_mul",
      {"acc", b.constant("tail_scale", NdArray({1, c}, scale))});
  y = b.node(OpType::Add, "tail_add",
             {y, b.constant("tail_bias", NdArray({1, c}, bias))});
  if (coin(rng)) y = b.node(OpType::Relu, "tail_relu", {y});
  const double zero =
      q.is_signed ? 0.0 : static_cast<double>(uniform_int(rng, 0, 1));
  y = b.quant(y, "tail_quant", NdArray::scalar(sq), NdArray::scalar(zero), q);
  g.set_outputs({y});
  g.validate();
  return out;
}

}  // namespace qrange
