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

#include "qrange/accmin.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "qrange/error.hpp"

namespace qrange {

namespace {

int64_t to_int(double v) { return static_cast<int64_t>(std::llround(v)); }

// Smallest p with 2^p >= m, for m >= 1.
int ceil_log2(uint64_t m) {
  int p = 0;
  while ((uint64_t{1} << p) < m) ++p;
  return p;
}

struct MacOperands {
  std::string x;
  std::string w;
  int64_t K = 0;
};

std::optional<MacOperands> mac_operands(const Graph& g, const Node& node) {
  if (node.op == OpType::Conv) {
    const Shape& ws = g.tensor(node.inputs[1]).shape;
    if (ws.size() != 4) return std::nullopt;
    return MacOperands{node.inputs[0], node.inputs[1], ws[1] * ws[2] * ws[3]};
  }
  const auto weight_like = [&](const std::string& name) {
    const TensorInfo& t = g.tensor(name);
    return t.is_constant() && t.shape.size() == 2 &&
           is_integer_valued(*t.data);
  };
  if (weight_like(node.inputs[1])) {
    return MacOperands{node.inputs[0], node.inputs[1],
                       g.tensor(node.inputs[1]).shape[0]};
  }
  if (weight_like(node.inputs[0])) {
    return MacOperands{node.inputs[1], node.inputs[0],
                       g.tensor(node.inputs[0]).shape[1]};
  }
  return std::nullopt;
}

std::optional<int> input_width(const Graph& g, const std::string& x,
                               const RangeMap& ranges) {
  if (const auto p = g.producer(x)) {
    const Node& prod = g.nodes()[*p];
    if (prod.op == OpType::Quant) {
      const auto view = scaled_int_view(ranges.at(prod.outputs[0]));
      if (view && view->is_unit()) return prod.quant().bitwidth;
    }
    if (prod.op == OpType::MultiThreshold) {
      const auto view = scaled_int_view(ranges.at(prod.outputs[0]));
      if (view && view->is_unit()) return prod.multithreshold().out_bits;
    }
  }
  const auto it = ranges.find(x);
  if (it == ranges.end()) return std::nullopt;
  const auto view = scaled_int_view(it->second);
  if (!view || !view->is_unit()) return std::nullopt;
  const Interval& zi = *view->int_range;
  const int64_t lo = to_int(*std::min_element(zi.lo().values().begin(),
                                              zi.lo().values().end()));
  const double hi = *std::max_element(zi.hi().values().begin(),
                                      zi.hi().values().end());
  if (lo >= 0) return unsigned_width(to_int(hi));
  return signed_width(lo, to_int(hi));
}

}  // namespace

int datatype_bound(int64_t K, int N, int M) {
  if (K < 1 || N < 1 || M < 1) {
    throw AnalysisError("datatype bound needs K, N, M >= 1");
  }
  const double alpha = std::log2(static_cast<double>(K)) + N + M - 1;
  const double phi = std::log2(1.0 + std::exp2(-alpha));
  return static_cast<int>(std::ceil(alpha + phi + 1.0 - 1e-12));
}

int sira_bound(int64_t lo, int64_t hi) {
  const uint64_t m = std::max<uint64_t>(
      static_cast<uint64_t>(std::llabs(lo)),
      static_cast<uint64_t>(std::llabs(hi)) + 1);
  return ceil_log2(m) + 1;
}

int sira_bound(const Interval& z) {
  if (!z.is_integer()) {
    throw AnalysisError(
        "accumulator range is not integer; streamline the layer first");
  }
  int bits = 1;
  for (std::size_t i = 0; i < z.size(); ++i) {
    bits = std::max(bits, sira_bound(to_int(z.lo()[i]), to_int(z.hi()[i])));
  }
  return bits;
}

int signed_width(int64_t lo, int64_t hi) {
  int n = 1;
  while (lo < -(int64_t{1} << (n - 1)) || hi > (int64_t{1} << (n - 1)) - 1) {
    ++n;
  }
  return n;
}

int unsigned_width(int64_t hi) {
  int n = 1;
  while (hi > (int64_t{1} << n) - 1) ++n;
  return n;
}

int64_t wrap_to_bits(int64_t v, int bits) {
  if (bits >= 64) return v;
  const uint64_t mask = (uint64_t{1} << bits) - 1;
  uint64_t u = static_cast<uint64_t>(v) & mask;
  if (u & (uint64_t{1} << (bits - 1))) u |= ~mask;
  return static_cast<int64_t>(u);
}

std::vector<int64_t> extremal_input(const std::vector<int64_t>& w,
                                    const std::vector<int64_t>& lo,
                                    const std::vector<int64_t>& hi,
                                    bool maximize) {
  std::vector<int64_t> x(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    const bool up = (w[i] >= 0) == maximize;
    x[i] = up ? hi[i] : lo[i];
  }
  return x;
}

AccminReport annotate_accumulators(const Graph& g, const RangeMap& ranges) {
  AccminReport report;
  for (const std::size_t idx : topo_sort(g)) {
    const Node& node = g.nodes()[idx];
    if (node.op != OpType::MatMul && node.op != OpType::Conv) continue;

    const ScaledIntRange& out = ranges.at(node.outputs[0]);
    const auto view = scaled_int_view(out);
    if (!view) {
      throw AnalysisError("MAC node '" + node.name +
                          "' has no integer output range; streamline first");
    }
    AccumulatorAnnotation a;
    a.node = node.name;
    a.output_int_range = *view->int_range;
    a.sira_bits = sira_bound(a.output_int_range);

    if (const auto ops = mac_operands(g, node)) {
      a.K = ops->K;
      const NdArray& w = *g.tensor(ops->w).data;
      if (is_integer_valued(w)) {
        const auto [mn, mx] =
            std::minmax_element(w.values().begin(), w.values().end());
        a.weight_bits = signed_width(to_int(*mn), to_int(*mx));
      }
      a.input_bits = input_width(g, ops->x, ranges);
      if (a.input_bits && a.weight_bits) {
        a.datatype_bound_bits =
            datatype_bound(a.K, *a.input_bits, *a.weight_bits);
      }
    }
    report.layers.push_back(std::move(a));
  }

  AccminSummary& s = report.summary;
  s.layers = report.layers.size();
  if (s.layers == 0) return report;
  double sum_s = 0.0, sum_s_with_d = 0.0, sum_d = 0.0;
  std::size_t with_d = 0;
  for (const auto& a : report.layers) {
    sum_s += a.sira_bits;
    if (a.datatype_bound_bits) {
      sum_d += *a.datatype_bound_bits;
      sum_s_with_d += a.sira_bits;
      ++with_d;
    }
  }
  s.mean_sira = sum_s / static_cast<double>(s.layers);
  s.reduction_vs_32_pct = 100.0 * (1.0 - s.mean_sira / 32.0);
  if (with_d > 0) {
    s.mean_dtb = sum_d / static_cast<double>(with_d);
    s.reduction_vs_dtb_pct = 100.0 * (1.0 - sum_s_with_d / sum_d);
  }
  return report;
}

}  // namespace qrange
