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

#include "qrange/costmodel.hpp"

#include <algorithm>
#include <cmath>

#include "qrange/error.hpp"

namespace qrange {

std::string_view to_string(EltwiseOp op) {
  switch (op) {
    case EltwiseOp::Mul: return "Mul";
    case EltwiseOp::Add: return "Add";
    case EltwiseOp::ToInt: return "ToInt";
    case EltwiseOp::Max: return "Max";
  }
  return "?";
}

EltwiseOp parse_eltwise_op(std::string_view name) {
  for (EltwiseOp op :
       {EltwiseOp::Mul, EltwiseOp::Add, EltwiseOp::ToInt, EltwiseOp::Max}) {
    if (to_string(op) == name) return op;
  }
  throw CostModelError("unknown elementwise op '" + std::string(name) + "'");
}

std::string_view to_string(Granularity g) {
  return g == Granularity::per_channel ? "per_channel" : "per_tensor";
}

std::string_view to_string(TailKind k) {
  return k == TailKind::thresholding ? "thresholding" : "composite";
}

void TailConfig::validate() const {
  if (n_i <= 0 || n_p <= 0 || n_o <= 0 || C <= 0 || PE <= 0) {
    throw CostModelError("tail config fields must be positive");
  }
  if (PE > C) {
    throw CostModelError("PE (" + std::to_string(PE) +
                         ") exceeds channel count (" + std::to_string(C) +
                         ")");
  }
  if (n_o > 40) throw CostModelError("output bitwidth above 40 bits");
}

EltwiseCoefficients eltwise_coefficients(EltwiseOp op) {
  switch (op) {
    case EltwiseOp::Mul: return {1.18, 124.0};
    case EltwiseOp::Add: return {2.0, 24.0};
    case EltwiseOp::ToInt: return {4.2, 13.0};
    case EltwiseOp::Max: return {4.0, 21.0};
  }
  throw CostModelError("unknown elementwise op");
}

double eltwise_luts(EltwiseOp op, int n_i, int n_p, int64_t pe) {
  const auto [alpha, beta] = eltwise_coefficients(op);
  const double PE = static_cast<double>(pe);
  switch (op) {
    case EltwiseOp::Mul: return alpha * n_i * n_p * PE + beta;
    case EltwiseOp::Add: return alpha * (n_i + n_p) * PE + beta;
    case EltwiseOp::ToInt:
    case EltwiseOp::Max: return alpha * n_i * PE + beta;
  }
  throw CostModelError("unknown elementwise op");
}

CostEstimate eltwise_cost(EltwiseOp op, const TailConfig& cfg) {
  cfg.validate();
  CostEstimate e;
  e.lut_compute = eltwise_luts(op, cfg.n_i, cfg.n_p, cfg.PE);
  e.lut_total = e.lut_compute;
  e.breakdown.emplace_back(std::string(to_string(op)), e.lut_compute);
  return e;
}

CostEstimate composite_tail_cost(const TailConfig& cfg) {
  cfg.validate();
  const int ni = cfg.n_i, np = cfg.n_p;
  const int64_t pe = cfg.PE;
  CostEstimate e;
  e.breakdown = {
      {"Mul", eltwise_luts(EltwiseOp::Mul, ni, np, pe)},
      {"Add", eltwise_luts(EltwiseOp::Add, ni + np, np, pe)},
      {"Max", eltwise_luts(EltwiseOp::Max, ni + np + 1, 0, pe)},
      {"Mul", eltwise_luts(EltwiseOp::Mul, ni + np + 1, np, pe)},
      {"ToInt", eltwise_luts(EltwiseOp::ToInt, ni + np + 1, 0, pe)},
  };
  for (const auto& [name, luts] : e.breakdown) e.lut_compute += luts;
  e.lut_memory =
      2.0 * static_cast<double>(cfg.effective_channels()) * np / 64.0;
  e.breakdown.emplace_back("memory", e.lut_memory);
  e.lut_total = e.lut_compute + e.lut_memory;
  return e;
}

CostEstimate threshold_cost(const TailConfig& cfg) {
  cfg.validate();
  CostEstimate e;
  const double sum_thresholds = (std::exp2(cfg.n_o) - 1.0) *
                                static_cast<double>(cfg.effective_channels());
  const double mem_bits = sum_thresholds * cfg.n_i;
  e.lut_memory = mem_bits / 64.0;
  e.lut_compute = static_cast<double>(cfg.n_o) *
                  static_cast<double>(cfg.PE) * cfg.n_i;
  e.lut_total = e.lut_compute + e.lut_memory;
  e.breakdown = {{"comparators", e.lut_compute}, {"memory", e.lut_memory}};
  return e;
}

TailRecommendation recommend_tail(const TailConfig& cfg) {
  TailRecommendation r;
  r.threshold = threshold_cost(cfg);
  r.composite = composite_tail_cost(cfg);
  r.winner = r.threshold.lut_total <= r.composite.lut_total
                 ? TailKind::thresholding
                 : TailKind::composite;
  return r;
}

std::vector<SweepRow> sweep_output_bits(const TailConfig& base, int no_lo,
                                        int no_hi) {
  if (no_lo < 1 || no_hi < no_lo) {
    throw CostModelError("invalid output-bit sweep range");
  }
  std::vector<SweepRow> rows;
  for (int no = no_lo; no <= no_hi; ++no) {
    SweepRow row;
    row.cfg = base;
    row.cfg.n_o = no;
    row.rec = recommend_tail(row.cfg);
    row.crossover = !rows.empty() && rows.back().rec.winner != row.rec.winner;
    rows.push_back(std::move(row));
  }
  return rows;
}

FixedPointFormat fit_fixed_point(const std::vector<double>& values,
                                 double max_rel_err) {
  if (max_rel_err < 0.0 || !std::isfinite(max_rel_err)) {
    throw CostModelError("max relative error must be finite and >= 0");
  }
  double max_abs = 0.0;
  for (double v : values) {
    if (!std::isfinite(v)) throw CostModelError("non-finite value");
    max_abs = std::max(max_abs, std::abs(v));
  }
  int int_bits = 0;
  for (double m = std::floor(max_abs); m >= 1.0; m = std::floor(m / 2.0)) {
    ++int_bits;
  }
  FixedPointFormat fmt;
  fmt.I = int_bits + 1;
  for (int F = 0; F <= 32; ++F) {
    const double step = std::exp2(F);
    bool ok = true;
    for (double v : values) {
      if (v == 0.0) continue;
      const double q = std::nearbyint(v * step) / step;
      if (std::abs(q - v) / std::abs(v) > max_rel_err) {
        ok = false;
        break;
      }
    }
    if (ok) {
      fmt.F = F;
      fmt.W = fmt.I + F;
      return fmt;
    }
  }
  throw CostModelError("no fixed-point format with at most 32 fractional "
                       "bits meets the error bound");
}

bool all_powers_of_two(const std::vector<double>& values) {
  for (double v : values) {
    if (v == 0.0) continue;
    int exp = 0;
    const double m = std::frexp(std::abs(v), &exp);
    if (m != 0.5) return false;
  }
  return true;
}

}  // namespace qrange
