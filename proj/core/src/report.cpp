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

#include "qrange/report.hpp"

#include <sstream>

#include "qrange/error.hpp"
#include "qrange/graph_io.hpp"

namespace qrange {

using nlohmann::json;

namespace {

// Prints -0.0 as 0.
NdArray clean(const NdArray& a) {
  return map(a, [](double v) { return v == 0.0 ? 0.0 : v; });
}

json values(const NdArray& a) { return clean(a).values(); }

json compact_array(const NdArray& a) {
  const NdArray c = clean(compact(a));
  if (c.size() == 1) return c[0];
  return array_to_json(c);
}

}  // namespace

json range_to_json(const ScaledIntRange& r) {
  json j = {{"shape", r.shape()},
            {"lo", values(r.range.lo())},
            {"hi", values(r.range.hi())}};
  if (r.is_scaled_int()) {
    j["int_lo"] = values(r.int_range->lo());
    j["int_hi"] = values(r.int_range->hi());
    j["scale"] = compact_array(*r.scale);
    j["bias"] = compact_array(*r.bias);
    json contrib = json::object();
    for (const auto& [name, role] : r.contributors) {
      contrib[name] = std::string(to_string(role));
    }
    j["contributors"] = contrib;
  }
  return j;
}

json ranges_to_json(const RangeMap& ranges) {
  json j = json::object();
  for (const auto& [name, r] : ranges) j[name] = range_to_json(r);
  return j;
}

RangeMap input_ranges_from_json(const json& doc, const Graph& g) {
  if (!doc.is_object()) throw GraphError("range file must be an object");
  RangeMap out;
  for (const auto& [name, spec] : doc.items()) {
    const std::string what = "range of '" + name + "'";
    if (!g.has_tensor(name) || g.is_constant(name)) {
      throw GraphError(what + ": no such dynamic tensor in the graph");
    }
    if (!spec.is_object()) throw GraphError(what + " must be an object");
    for (const auto& item : spec.items()) {
      const std::string& k = item.key();
      if (k != "lo" && k != "hi" && k != "int_lo" && k != "int_hi" &&
          k != "scale" && k != "bias") {
        throw GraphError(what + " has unknown key '" + k + "'");
      }
    }
    const Shape& shape = g.tensor(name).shape;
    const auto arr = [&](const char* key) {
      return array_from_json(spec.at(key), what + " " + key);
    };
    ScaledIntRange r;
    try {
      if (spec.contains("int_lo") || spec.contains("int_hi")) {
        if (!spec.contains("int_lo") || !spec.contains("int_hi")) {
          throw GraphError(what + " needs both int_lo and int_hi");
        }
        const NdArray scale =
            spec.contains("scale") ? arr("scale") : NdArray::scalar(1.0);
        const NdArray bias =
            spec.contains("bias") ? arr("bias") : NdArray::scalar(0.0);
        const Interval zi =
            Interval(arr("int_lo"), arr("int_hi")).broadcast_to(shape);
        if (!zi.is_integer()) {
          throw GraphError(what + ": int_lo/int_hi must be integers");
        }
        r = ScaledIntRange::from_scaled_int(zi, scale, bias);
        if (r.shape() != shape) {
          throw GraphError(what + ": scale/bias do not broadcast to " +
                           shape_to_string(shape));
        }
      } else {
        if (!spec.contains("lo") || !spec.contains("hi")) {
          throw GraphError(what + " needs lo and hi");
        }
        r = ScaledIntRange::from_interval(
            Interval(arr("lo"), arr("hi")).broadcast_to(shape));
      }
    } catch (const ShapeError& e) {
      throw GraphError(what + ": " + e.what());
    } catch (const AnalysisError& e) {
      throw GraphError(what + ": " + e.what());
    }
    out.emplace(name, std::move(r));
  }
  return out;
}

RangeMap load_input_ranges(const std::filesystem::path& path, const Graph& g) {
  json doc;
  try {
    doc = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw GraphError(path.string() + ": " + e.what());
  }
  return input_ranges_from_json(doc, g);
}

json accmin_to_json(const AccminReport& report) {
  json layers = json::array();
  for (const auto& a : report.layers) {
    json j = {{"node", a.node},
              {"K", a.K},
              {"P_S", a.sira_bits},
              {"int_range",
               {{"lo", values(a.output_int_range.lo())},
                {"hi", values(a.output_int_range.hi())}}}};
    j["N"] = a.input_bits ? json(*a.input_bits) : json(nullptr);
    j["M"] = a.weight_bits ? json(*a.weight_bits) : json(nullptr);
    j["P_D"] = a.datatype_bound_bits ? json(*a.datatype_bound_bits)
                                     : json(nullptr);
    layers.push_back(std::move(j));
  }
  const auto& s = report.summary;
  return {{"layers", layers},
          {"summary",
           {{"layers", s.layers},
            {"mean_sira", s.mean_sira},
            {"mean_dtb", s.mean_dtb},
            {"reduction_vs_32_pct", s.reduction_vs_32_pct},
            {"reduction_pct", s.reduction_vs_dtb_pct}}}};
}

json verify_to_json(const VerifyReport& report) {
  json violations = json::array();
  for (const auto& v : report.violations) {
    violations.push_back({{"tensor", v.tensor},
                          {"sample", v.sample},
                          {"index", v.index},
                          {"value", v.value},
                          {"lo", v.lo},
                          {"hi", v.hi}});
  }
  json slack = json::object();
  for (const auto& [name, s] : report.slack) {
    slack[name] = {{"max", s.max_slack}, {"mean", s.mean_slack}};
  }
  json observed = json::object();
  for (const auto& [name, iv] : report.trace.observed) {
    observed[name] = {{"lo", values(iv.lo())}, {"hi", values(iv.hi())}};
  }
  return {{"ok", report.ok()},
          {"samples", report.samples},
          {"seed", report.seed},
          {"violation_count", report.violation_count},
          {"violations", violations},
          {"slack", slack},
          {"stuck_channels", report.stuck_channels},
          {"observed", observed}};
}

json streamline_to_json(const StreamlineResult& result) {
  json targets = json::array();
  for (const auto& t : result.targets) {
    targets.push_back({{"tensor", t.tensor},
                       {"scale", compact_array(t.scale)},
                       {"bias", compact_array(t.bias)},
                       {"erased", t.erased}});
  }
  return {{"targets", targets},
          {"max_rel_deviation", result.max_rel_deviation},
          {"deviation_samples", result.deviation_samples},
          {"nodes", result.graph.nodes().size()}};
}

json converted_tails_to_json(const std::vector<ConvertedTail>& tails) {
  json out = json::array();
  for (const auto& t : tails) {
    json j = {{"anchor", t.anchor},
              {"multithreshold", t.multithreshold},
              {"channels", t.channels},
              {"out_bits", t.out_bits},
              {"max_step", t.max_step}};
    if (t.max_step > 1) {
      j["note"] = "steps above 1 are encoded as repeated thresholds; "
                  "kernels limited to unit steps cannot run this table";
    }
    out.push_back(std::move(j));
  }
  return out;
}

json cost_to_json(const CostEstimate& e) {
  json breakdown = json::array();
  for (const auto& [name, luts] : e.breakdown) {
    breakdown.push_back({{"op", name}, {"luts", luts}});
  }
  return {{"lut_compute", e.lut_compute},
          {"lut_memory", e.lut_memory},
          {"lut_total", e.lut_total},
          {"breakdown", breakdown}};
}

std::string sweep_to_csv(const std::vector<SweepRow>& rows, bool pot) {
  std::ostringstream os;
  os.precision(10);
  os << "n_i,n_p,n_o,C,PE,granularity,threshold_total,composite_total,"
        "winner,crossover"
     << (pot ? ",pot" : "") << '\n';
  for (const auto& r : rows) {
    os << r.cfg.n_i << ',' << r.cfg.n_p << ',' << r.cfg.n_o << ',' << r.cfg.C
       << ',' << r.cfg.PE << ',' << to_string(r.cfg.granularity) << ','
       << r.rec.threshold.lut_total << ',' << r.rec.composite.lut_total << ','
       << to_string(r.rec.winner) << ',' << (r.crossover ? 1 : 0)
       << (pot ? ",1" : "") << '\n';
  }
  return os.str();
}

}  // namespace qrange
