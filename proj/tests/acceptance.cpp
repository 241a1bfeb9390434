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

// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "qrange/accmin.hpp"
#include "qrange/costmodel.hpp"
#include "qrange/generators.hpp"
#include "qrange/graph_io.hpp"
#include "qrange/interpreter.hpp"
#include "qrange/log.hpp"
#include "qrange/lowering.hpp"
#include "qrange/report.hpp"
#include "qrange/sira.hpp"
#include "qrange/streamline.hpp"
#include "qrange/threshold.hpp"
#include "test_util.hpp"

namespace qrange {
namespace {

// Collects failure messages for one criterion.
struct Check {
  std::vector<std::string> failures;

  void expect(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
  bool ok() const { return failures.empty(); }
};

std::string str(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

void expect_vec(Check& c, const std::string& what, const NdArray& got,
                std::vector<double> want, double tol) {
  // A single expected value stands for a uniform tensor.
  if (want.size() == 1) want.assign(got.size(), want[0]);
  if (got.size() != want.size()) {
    c.expect(false, what + ": size " + std::to_string(got.size()));
    return;
  }
  for (std::size_t i = 0; i < want.size(); ++i) {
    c.expect(std::abs(got[i] - want[i]) <= tol,
             what + "[" + std::to_string(i) + "] = " + str(got[i]) +
                 ", expected " + str(want[i]));
  }
}

void expect_scaled(Check& c, const RangeMap& r, const std::string& name,
                   const std::vector<double>& scale,
                   const std::vector<double>& int_lo,
                   const std::vector<double>& int_hi,
                   const std::vector<double>& bias) {
  const auto it = r.find(name);
  if (it == r.end() || !it->second.is_scaled_int()) {
    c.expect(false, name + " has no scaled-integer range");
    return;
  }
  const ScaledIntRange& s = it->second;
  expect_vec(c, name + " scale", compact(*s.scale), scale, 1e-2);
  expect_vec(c, name + " int_lo", s.int_range->lo(), int_lo, 0.0);
  expect_vec(c, name + " int_hi", s.int_range->hi(), int_hi, 0.0);
  expect_vec(c, name + " bias", compact(*s.bias), bias, 1e-2);
}

Check worked_example() {
  Check c;
  const Graph g = load_graph(testing::sample_path("fig7.json"));
  const RangeMap in =
      load_input_ranges(testing::sample_path("worked_example_ranges.json"), g);
  const RangeMap r = analyze(g, in);
  const std::vector<double> mlo{-91, -49, -96}, mhi{91, 49, 96};
  expect_scaled(c, r, "qW", {0.2, 0.3, 0.1}, {-8, 7, -8, 7, 0, -8},
                {-8, 7, -8, 7, 0, -8}, {0});
  expect_scaled(c, r, "qX", {0.7}, {-7, -5}, {7, 5}, {0});
  expect_scaled(c, r, "mm", {0.14, 0.21, 0.07}, mlo, mhi, {0});
  expect_scaled(c, r, "mm_b", {0.14, 0.21, 0.07}, mlo, mhi,
                {-3.30, -5.20, -6.10});
  expect_scaled(c, r, "bn_m", {0.08, 0.04, 0.03}, mlo, mhi,
                {-1.98, -1.04, -2.44});
  expect_scaled(c, r, "bn_n", {0.08, 0.04, 0.03}, mlo, mhi,
                {-2.18, -1.44, -1.34});
  expect_vec(c, "r lo", r.at("r").range.lo(), {0, 0, 0}, 0.0);
  expect_vec(c, "r hi", r.at("r").range.hi(), {5.46, 0.62, 1.35}, 1e-2);
  expect_scaled(c, r, "qy", {0.1}, {0, 0, 0}, {15, 6, 13}, {0});
  return c;
}

Check accumulator_width() {
  Check c;
  const Graph g = load_graph(testing::sample_path("fig11.json"));
  const RangeMap in =
      load_input_ranges(testing::sample_path("worked_example_ranges.json"), g);
  const auto rep = annotate_accumulators(g, analyze(g, in));
  c.expect(rep.layers.size() == 1, "expected one MAC layer");
  if (!rep.layers.empty()) {
    c.expect(rep.layers[0].sira_bits == 8,
             "P_S = " + std::to_string(rep.layers[0].sira_bits));
  }

  std::mt19937_64 rng(2024);
  std::size_t layers = 0;
  while (layers < 100) {
    const RangedGraph rg = random_mlp(rng);
    StreamlineOptions opts;
    opts.deviation_samples = 0;
    const auto s = streamline(rg.graph, rg.input_ranges, opts);
    const auto acc =
        annotate_accumulators(s.graph, analyze(s.graph, rg.input_ranges));
    for (const auto& a : acc.layers) {
      if (layers == 100) break;
      ++layers;
      if (!a.datatype_bound_bits) {
        c.expect(false, a.node + " has no datatype bound");
        continue;
      }
      c.expect(a.sira_bits <= *a.datatype_bound_bits,
               a.node + ": P_S " + std::to_string(a.sira_bits) + " > P_D " +
                   std::to_string(*a.datatype_bound_bits));
    }
  }
  return c;
}

Check threshold_exactness() {
  Check c;
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> bits(2, 4);
  std::uniform_int_distribution<int64_t> chans(1, 32);
  for (int i = 0; i < 50; ++i) {
    TailOptions opts;
    opts.out_bits = bits(rng);
    opts.channels = chans(rng);
    opts.max_domain = int64_t{1} << 14;
    const RangedGraph rg = random_tail(rng, opts);
    const std::string id = "tail " + std::to_string(i);
    const RangeMap r = analyze(rg.graph, rg.input_ranges);
    std::vector<ConvertedTail> info;
    const Graph conv = convert_tails(rg.graph, r, &info);
    if (info.size() != 1) {
      c.expect(false, id + " was not converted");
      continue;
    }
    const auto tail = find_tail(rg.graph, r, info[0].anchor);
    const ThresholdTable table =
        extract_thresholds(rg.graph, *tail, r.at(tail->input));

    const ScaledIntRange& in = rg.input_ranges.at("acc");
    const NdArray& lo = in.int_range->lo();
    const NdArray& hi = in.int_range->hi();
    const std::size_t C = lo.size();
    int64_t span = 0;
    for (std::size_t k = 0; k < C; ++k) {
      const auto n = static_cast<int64_t>(hi[k] - lo[k]) + 1;
      c.expect(n <= opts.max_domain, id + " domain too large");
      span = std::max(span, n - 1);
    }
    std::size_t mismatches = 0, eval_mismatches = 0;
    for (int64_t off = 0; off <= span; ++off) {
      std::vector<double> v(C);
      for (std::size_t k = 0; k < C; ++k) v[k] = std::min(lo[k] + off, hi[k]);
      const TensorMap feed{{"acc", NdArray(in.shape(), v)}};
      if (run(conv, feed) != run(rg.graph, feed)) ++mismatches;
      for (std::size_t k = 0; k < C; ++k) {
        const std::size_t row = table.channels() == 1 ? 0 : k;
        const auto x = static_cast<int64_t>(v[k]);
        eval_mismatches +=
            eval_parallel(table, x, row) != eval_binary_search(table, x, row);
      }
    }
    c.expect(mismatches == 0,
             id + ": " + std::to_string(mismatches) + " mismatching points");
    c.expect(eval_mismatches == 0,
             id + ": parallel and binary-search evaluation disagree");
  }
  return c;
}

Check soundness() {
  Check c;
  std::mt19937_64 rng(99);
  constexpr std::size_t kSamples = 10000;
  bool saw_depthwise = false;
  for (int i = 0; i < 24; ++i) {
    const bool cnn = i % 2 == 1;
    const RangedGraph rg = cnn ? random_cnn(rng) : random_mlp(rng);
    const Graph g = lower(rg.graph);
    for (const auto& n : g.nodes()) {
      if (n.op == OpType::Conv && n.conv().group > 1) saw_depthwise = true;
    }
    const RangeMap r = analyze(g, rg.input_ranges);
    const VerifyReport rep =
        verify_ranges(g, r, kSamples, static_cast<uint64_t>(i));
    c.expect(rep.ok(), "graph " + std::to_string(i) + ": " +
                           std::to_string(rep.violation_count) +
                           " violations");
  }
  c.expect(saw_depthwise, "no depthwise convolution was exercised");
  return c;
}

// Single MAC on 3-bit operands: unit Quant of the input, then a MatMul with
// a K x 1 weight column.
RangedGraph mac_graph(const std::vector<int64_t>& w, bool signed_input) {
  const auto K = static_cast<int64_t>(w.size());
  RangedGraph rg;
  Graph& g = rg.graph;
  g.add_input("X", {1, K});
  g.add_constant("one", NdArray::scalar(1.0));
  g.add_constant("zero", NdArray::scalar(0.0));
  g.add_constant("W", NdArray({K, 1}, std::vector<double>(w.begin(), w.end())));
  g.add_node({"q", OpType::Quant, {"X", "one", "zero"}, {"XI"},
              QuantSpec{3, signed_input, false}});
  g.add_node({"mm", OpType::MatMul, {"XI", "W"}, {"Y"}, {}});
  g.set_outputs({"Y"});
  rg.input_ranges = signed_input ? uniform_input_ranges(g, -4, 3)
                                 : uniform_input_ranges(g, 0, 7);
  return rg;
}

void check_mac(Check& c, const std::vector<int64_t>& w, bool signed_input) {
  const RangedGraph rg = mac_graph(w, signed_input);
  const RangeMap r = analyze(rg.graph, rg.input_ranges);
  const auto rep = annotate_accumulators(rg.graph, r);
  const int ps = rep.layers.at(0).sira_bits;
  const std::size_t K = w.size();
  const int64_t xlo = signed_input ? -4 : 0, xhi = signed_input ? 3 : 7;

  std::string id = "w=(";
  for (auto v : w) id += std::to_string(v) + " ";
  id += signed_input ? ") signed" : ") unsigned";

  std::vector<int64_t> x(K, xlo);
  bool overflow = false;
  while (true) {
    int64_t dot = 0;
    for (std::size_t k = 0; k < K; ++k) dot += x[k] * w[k];
    if (wrap_to_bits(dot, ps) != dot) overflow = true;
    std::size_t k = 0;
    while (k < K && x[k] == xhi) x[k++] = xlo;
    if (k == K) break;
    ++x[k];
  }
  c.expect(!overflow, id + ": overflow at P_S = " + std::to_string(ps));

  if (ps <= 1) return;
  const std::vector<int64_t> lo(K, xlo), hi(K, xhi);
  const NdArray& zlo = rep.layers[0].output_int_range.lo();
  const NdArray& zhi = rep.layers[0].output_int_range.hi();
  bool witnessed = false;
  for (bool maximize : {true, false}) {
    const auto e = extremal_input(w, lo, hi, maximize);
    int64_t dot = 0;
    for (std::size_t k = 0; k < K; ++k) dot += e[k] * w[k];
    const double bound = maximize ? zhi[0] : zlo[0];
    if (static_cast<double>(dot) != bound) {
      c.expect(false, id + ": extremal input misses the range bound");
      continue;
    }
    if (wrap_to_bits(dot, ps - 1) != dot) {
      witnessed = true;
    }
  }
  c.expect(witnessed, id + ": no overflow witness at P_S - 1");
}

Check lossless_accumulation() {
  Check c;
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int64_t> wd(-4, 3);
  for (std::size_t K = 1; K <= 8; ++K) {
    // All weight vectors for small K, a random sample for larger K.
    std::vector<std::vector<int64_t>> weights;
    if (K <= 3) {
      std::vector<int64_t> w(K, -4);
      while (true) {
        weights.push_back(w);
        std::size_t k = 0;
        while (k < K && w[k] == 3) w[k++] = -4;
        if (k == K) break;
        ++w[k];
      }
    } else {
      for (int t = 0; t < (K <= 5 ? 40 : 8); ++t) {
        std::vector<int64_t> w(K);
        for (auto& v : w) v = wd(rng);
        weights.push_back(std::move(w));
      }
    }
    for (std::size_t i = 0; i < weights.size(); ++i) {
      check_mac(c, weights[i], i % 2 == 0);
    }
  }
  return c;
}

struct CostParts {
  Check eltwise, threshold_sum, small_no, large_no;
};

CostParts cost_model() {
  CostParts p;
  const struct {
    EltwiseOp op;
    int n_i, n_p;
    int64_t pe;
    double want;
  } cases[] = {
      {EltwiseOp::Mul, 8, 8, 1, 1.18 * 64 + 124},
      {EltwiseOp::Mul, 16, 4, 4, 1.18 * 16 * 4 * 4 + 124},
      {EltwiseOp::Add, 8, 8, 2, 2.0 * 16 * 2 + 24},
      {EltwiseOp::Add, 24, 16, 1, 2.0 * 40 + 24},
      {EltwiseOp::ToInt, 25, 0, 1, 4.2 * 25 + 13},
      {EltwiseOp::ToInt, 8, 0, 8, 4.2 * 64 + 13},
      {EltwiseOp::Max, 1, 0, 1, 4.0 + 21},
      {EltwiseOp::Max, 17, 0, 4, 4.0 * 68 + 21},
  };
  for (const auto& k : cases) {
    const double got = eltwise_luts(k.op, k.n_i, k.n_p, k.pe);
    p.eltwise.expect(std::abs(got - k.want) <= 1e-9,
                     std::string(to_string(k.op)) + " = " + str(got) +
                         ", expected " + str(k.want));
  }

  for (int no = 1; no <= 12; ++no) {
    for (int64_t C : {1, 64, 300, 512}) {
      TailConfig cfg;
      cfg.n_o = no;
      cfg.C = C;
      cfg.n_i = 8;
      const double sum = (std::exp2(no) - 1.0) * static_cast<double>(C);
      const double mem = threshold_cost(cfg).lut_memory;
      p.threshold_sum.expect(std::abs(mem - sum * cfg.n_i / 64.0) <= 1e-9,
                             "threshold memory for n_o=" +
                                 std::to_string(no) + " C=" +
                                 std::to_string(C));
    }
  }

  std::size_t small_total = 0, large_total = 0, small_bad = 0, large_bad = 0;
  std::string small_first, large_first;
  for (int64_t C = 64; C <= 512; C += 64) {
    for (int64_t PE = 1; PE <= 8; ++PE) {
      for (int ni = 8; ni <= 24; ++ni) {
        for (int no = 1; no <= 16; ++no) {
          if (no > 3 && no < 9) continue;
          TailConfig cfg;
          cfg.n_i = ni;
          cfg.n_p = 16;
          cfg.n_o = no;
          cfg.C = C;
          cfg.PE = PE;
          const TailRecommendation rec = recommend_tail(cfg);
          std::ostringstream where;
          where << "C=" << C << " PE=" << PE << " n_i=" << ni << " n_o=" << no
                << ": threshold " << rec.threshold.lut_total << " vs composite "
                << rec.composite.lut_total;
          if (no <= 3) {
            ++small_total;
            if (rec.winner != TailKind::thresholding) {
              if (!small_bad++) small_first = where.str();
            }
          } else {
            ++large_total;
            if (rec.winner != TailKind::composite) {
              if (!large_bad++) large_first = where.str();
            }
          }
        }
      }
    }
  }
  if (small_bad) {
    p.small_no.expect(false, std::to_string(small_bad) + "/" +
                                 std::to_string(small_total) +
                                 " grid points pick composite, first " +
                                 small_first);
  }
  if (large_bad) {
    p.large_no.expect(false, std::to_string(large_bad) + "/" +
                                 std::to_string(large_total) +
                                 " grid points pick thresholding, first " +
                                 large_first);
  }
  return p;
}

bool report(const std::string& label, const Check& c, double seconds,
            double limit) {
  const bool fast = seconds < limit;
  const bool pass = c.ok() && fast;
  std::printf("[%s] %s (%.3f s, limit %.0f s)\n", pass ? "PASS" : "FAIL",
              label.c_str(), seconds, limit);
  const std::size_t shown = std::min<std::size_t>(c.failures.size(), 5);
  for (std::size_t i = 0; i < shown; ++i) {
    std::printf("    %s\n", c.failures[i].c_str());
  }
  if (c.failures.size() > shown) {
    std::printf("    ... %zu more\n", c.failures.size() - shown);
  }
  if (!fast) std::printf("    runtime over limit\n");
  return pass;
}

template <typename F>
auto timed(F&& f, double* seconds) {
  const auto t0 = std::chrono::steady_clock::now();
  auto result = f();
  *seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                           t0)
                 .count();
  return result;
}

int run_all_criteria() {
  log::set_level(log::Level::error);
  bool all = true;
  double s = 0.0;

  auto guarded = [&](const std::string& label, auto&& fn, double limit) {
    Check c;
    try {
      c = timed(fn, &s);
    } catch (const std::exception& e) {
      c.expect(false, std::string("exception: ") + e.what());
    }
    all = report(label, c, s, limit) && all;
  };

  guarded("1 worked-example range reproduction", worked_example, 1.0);
  guarded("2 accumulator width and P_S <= P_D on 100 layers",
          accumulator_width, 1.0);
  guarded("3 threshold conversion exactness on 50 tails", threshold_exactness,
          60.0);
  guarded("4 range soundness on 24 random graphs", soundness, 300.0);
  guarded("5 lossless accumulation and overflow witness",
          lossless_accumulation, 60.0);

  CostParts parts;
  try {
    parts = timed(cost_model, &s);
  } catch (const std::exception& e) {
    parts.eltwise.expect(false, std::string("exception: ") + e.what());
  }
  Check combined;
  for (const Check* c : {&parts.eltwise, &parts.threshold_sum, &parts.small_no,
                         &parts.large_no}) {
    combined.failures.insert(combined.failures.end(), c->failures.begin(),
                             c->failures.end());
  }
  all = report("6 cost-model regression", combined, s, 10.0) && all;
  report("6a eltwise formulas match hand values", parts.eltwise, s, 10.0);
  report("6b threshold count is (2^n_o - 1) * C", parts.threshold_sum, s,
         10.0);
  report("6c thresholding wins for n_o <= 3 on the grid", parts.small_no, s,
         10.0);
  report("6d composite wins for n_o >= 9 on the grid", parts.large_no, s,
         10.0);

  std::printf("[N/A ] 7 hardware synthesis results (needs trained models and "
              "FPGA synthesis)\n");
  std::printf("%s\n", all ? "ALL CRITERIA PASSED" : "SOME CRITERIA FAILED");
  return all ? 0 : 1;
}

}  // namespace
}  // namespace qrange

int main() { return qrange::run_all_criteria(); }
