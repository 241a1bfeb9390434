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

#include "cli.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <optional>
#include <ostream>
#include <string>

#include "qrange/accmin.hpp"
#include "qrange/costmodel.hpp"
#include "qrange/error.hpp"
#include "qrange/graph_io.hpp"
#include "qrange/interpreter.hpp"
#include "qrange/log.hpp"
#include "qrange/lowering.hpp"
#include "qrange/report.hpp"
#include "qrange/sira.hpp"
#include "qrange/streamline.hpp"
#include "qrange/threshold.hpp"

namespace qrange::cli {

namespace {

using nlohmann::json;

struct Options {
  std::string graph;
  std::string ranges;
  std::string out;
  std::string report;
  std::string inputs;
  std::string policy = "activation-feeding";
  std::size_t samples = 10000;
  uint64_t seed = 0;
  bool thresholds = false;
  bool pot = false;
  double max_rel_err = 1e-3;

  // cost
  int n_i = 16;
  int n_p = 16;
  int n_o = 4;
  int64_t channels = 256;
  int64_t pe = 4;
  std::string granularity = "per_channel";
  std::string sweep;
};

void emit(const json& doc, const std::string& path, std::ostream& out) {
  const std::string text = doc.dump(2) + "\n";
  if (path.empty()) {
    out << text;
  } else {
    write_text_file(path, text);
  }
}

RangeMap require_ranges(const Options& o, const Graph& g) {
  if (o.ranges.empty()) {
    if (g.inputs().empty()) return {};
    throw Error("--ranges is required: graph has dynamic inputs");
  }
  return load_input_ranges(o.ranges, g);
}

void require_out(const Options& o) {
  if (o.out.empty()) throw Error("-o/--out is required for this command");
}

// Aggregated parameters with their fitted fixed-point formats.
json target_formats(const StreamlineResult& r, const Options& o) {
  json out = json::array();
  for (const auto& t : r.targets) {
    json j = {{"tensor", t.tensor}};
    for (const auto& [key, arr] :
         {std::pair<const char*, const NdArray*>{"scale", &t.scale},
          {"bias", &t.bias}}) {
      try {
        const auto f = fit_fixed_point(arr->values(), o.max_rel_err);
        j[key] = {{"W", f.W}, {"I", f.I}, {"F", f.F}};
      } catch (const CostModelError& e) {
        j[key] = {{"error", e.what()}};
      }
    }
    if (o.pot) j["pot_scale"] = all_powers_of_two(t.scale.values());
    out.push_back(std::move(j));
  }
  return out;
}

json verify_summary(const VerifyReport& v) {
  json j = verify_to_json(v);
  j.erase("observed");
  return j;
}

std::pair<int, int> parse_sweep(const std::string& text) {
  const auto bad = [&]() {
    return Error("--sweep expects no=<lo>..<hi>, got '" + text + "'");
  };
  if (text.rfind("no=", 0) != 0) throw bad();
  const auto dots = text.find("..", 3);
  if (dots == std::string::npos) throw bad();
  int lo = 0, hi = 0;
  const char* b = text.data();
  const auto r1 = std::from_chars(b + 3, b + dots, lo);
  const auto r2 = std::from_chars(b + dots + 2, b + text.size(), hi);
  if (r1.ec != std::errc() || r1.ptr != b + dots || r2.ec != std::errc() ||
      r2.ptr != b + text.size()) {
    throw bad();
  }
  return {lo, hi};
}

int cmd_analyze(const Options& o, std::ostream& out) {
  const Graph g = lower(load_graph(o.graph));
  const RangeMap ranges = analyze(g, require_ranges(o, g));
  json doc = {{"ranges", ranges_to_json(ranges)},
              {"stuck_channels", stuck_channels(g, ranges)}};
  emit(doc, o.report.empty() ? o.out : o.report, out);
  return 0;
}

int cmd_streamline(const Options& o, std::ostream& out) {
  require_out(o);
  const Graph g = load_graph(o.graph);
  StreamlineOptions so;
  so.policy = parse_target_policy(o.policy);
  so.deviation_samples = o.samples;
  so.seed = o.seed;
  const auto result = streamline(g, require_ranges(o, g), so);
  save_graph(result.graph, o.out);
  json doc = streamline_to_json(result);
  doc["formats"] = target_formats(result, o);
  emit(doc, o.report, out);
  return 0;
}

int cmd_thresholdize(const Options& o, std::ostream& out) {
  require_out(o);
  const Graph g = lower(load_graph(o.graph));
  const RangeMap ranges = analyze(g, require_ranges(o, g));
  std::vector<ConvertedTail> tails;
  const Graph converted = convert_tails(g, ranges, &tails);
  save_graph(converted, o.out);
  emit({{"converted", converted_tails_to_json(tails)}}, o.report, out);
  return 0;
}

int cmd_accmin(const Options& o, std::ostream& out) {
  const Graph g = lower(load_graph(o.graph));
  const RangeMap ranges = analyze(g, require_ranges(o, g));
  emit(accmin_to_json(annotate_accumulators(g, ranges)), o.report, out);
  return 0;
}

int cmd_cost(const Options& o, std::ostream& out) {
  TailConfig cfg;
  cfg.n_i = o.n_i;
  cfg.n_p = o.n_p;
  cfg.n_o = o.n_o;
  cfg.C = o.channels;
  cfg.PE = o.pe;
  if (o.granularity == "per_channel") {
    cfg.granularity = Granularity::per_channel;
  } else if (o.granularity == "per_tensor") {
    cfg.granularity = Granularity::per_tensor;
  } else {
    throw Error("--granularity must be per_channel or per_tensor");
  }
  if (!o.sweep.empty()) {
    const auto [lo, hi] = parse_sweep(o.sweep);
    const std::string csv = sweep_to_csv(sweep_output_bits(cfg, lo, hi), o.pot);
    if (o.out.empty()) {
      out << csv;
    } else {
      write_text_file(o.out, csv);
    }
    return 0;
  }
  const auto rec = recommend_tail(cfg);
  json doc = {{"winner", std::string(to_string(rec.winner))},
              {"threshold", cost_to_json(rec.threshold)},
              {"composite", cost_to_json(rec.composite)},
              {"model_mre", {{"eltwise", kEltwiseModelMre},
                             {"threshold", kThresholdModelMre}}}};
  if (o.pot) {
    doc["pot"] = "power-of-two scales noted; estimates are not adjusted";
  }
  emit(doc, o.report.empty() ? o.out : o.report, out);
  return 0;
}

int cmd_verify(const Options& o, std::ostream& out, std::ostream& err) {
  const Graph g = lower(load_graph(o.graph));
  const RangeMap ranges = analyze(g, require_ranges(o, g));
  const auto report = verify_ranges(g, ranges, o.samples, o.seed);
  emit(verify_to_json(report), o.report, out);
  if (!report.ok()) {
    const auto& v = report.violations.front();
    err << "error: " << report.violation_count
        << " range violations; first at tensor '" << v.tensor << "' sample "
        << v.sample << " index " << v.index << ": " << v.value
        << " not in [" << v.lo << ", " << v.hi << "]\n";
    return 1;
  }
  return 0;
}

int cmd_run(const Options& o, std::ostream& out) {
  const Graph g = load_graph(o.graph);
  TensorMap inputs;
  if (!o.inputs.empty()) {
    json doc;
    try {
      doc = json::parse(read_text_file(o.inputs));
    } catch (const json::parse_error& e) {
      throw Error(o.inputs + ": " + e.what());
    }
    if (!doc.is_object()) throw Error(o.inputs + " must be a JSON object");
    for (const auto& [name, value] : doc.items()) {
      inputs.emplace(name, array_from_json(value, "input '" + name + "'"));
    }
  }
  json doc = json::object();
  for (const auto& [name, value] : run(g, inputs)) {
    doc[name] = array_to_json(value);
  }
  emit(doc, o.report.empty() ? o.out : o.report, out);
  return 0;
}

int cmd_pipeline(const Options& o, std::ostream& out, std::ostream& err) {
  require_out(o);
  const Graph g = load_graph(o.graph);
  const RangeMap inputs = require_ranges(o, g);

  StreamlineOptions so;
  so.policy = parse_target_policy(o.policy);
  so.deviation_samples = o.samples;
  so.seed = o.seed;
  const auto streamlined = streamline(g, inputs, so);
  const RangeMap sranges = analyze(streamlined.graph, inputs);
  const auto acc = annotate_accumulators(streamlined.graph, sranges);

  Graph final_graph = streamlined.graph;
  std::vector<ConvertedTail> tails;
  if (o.thresholds) {
    final_graph = convert_tails(streamlined.graph, sranges, &tails);
  }
  // The output must survive a serialization round trip.
  final_graph = parse_graph(serialize_graph(final_graph));
  const RangeMap franges = analyze(final_graph, inputs);
  const auto verify = verify_ranges(final_graph, franges, o.samples, o.seed);
  const double deviation =
      max_relative_deviation(g, final_graph, inputs, o.samples, o.seed);
  save_graph(final_graph, o.out);

  json sdoc = streamline_to_json(streamlined);
  sdoc["formats"] = target_formats(streamlined, o);
  json doc = {{"streamline", sdoc},
              {"accmin", accmin_to_json(acc)},
              {"thresholds", converted_tails_to_json(tails)},
              {"verify", verify_summary(verify)},
              {"max_rel_deviation", deviation},
              {"ranges", ranges_to_json(franges)}};
  emit(doc, o.report, out);
  if (!verify.ok()) {
    err << "error: pipeline output failed range verification ("
        << verify.violation_count << " violations)\n";
    return 1;
  }
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Scaled-integer range analysis for quantized networks"};
  app.require_subcommand(1);
  Options o;

  const auto add_graph = [&](CLI::App* sub) {
    sub->add_option("graph", o.graph, "Graph JSON file")
        ->required()
        ->check(CLI::ExistingFile);
  };
  const auto add_ranges = [&](CLI::App* sub) {
    sub->add_option("--ranges", o.ranges, "Input range JSON file")
        ->check(CLI::ExistingFile);
  };
  const auto add_out = [&](CLI::App* sub) {
    sub->add_option("-o,--out", o.out, "Output path");
  };
  const auto add_report = [&](CLI::App* sub) {
    sub->add_option("--report", o.report, "Write the JSON report here");
  };
  const auto add_sampling = [&](CLI::App* sub) {
    sub->add_option("--samples", o.samples, "Number of sampled inputs")
        ->check(CLI::PositiveNumber);
    sub->add_option("--seed", o.seed, "Random seed");
  };
  const auto add_streamline_flags = [&](CLI::App* sub) {
    sub->add_option("--target-policy", o.policy,
                    "activation-feeding | latest | earliest");
    sub->add_option("--max-rel-err", o.max_rel_err,
                    "Error bound for fixed-point formats of aggregated "
                    "parameters")
        ->check(CLI::NonNegativeNumber);
    sub->add_flag("--pot", o.pot, "Annotate power-of-two scales");
  };

  auto* analyze_cmd = app.add_subcommand("analyze", "Range report");
  add_graph(analyze_cmd);
  add_ranges(analyze_cmd);
  add_out(analyze_cmd);
  add_report(analyze_cmd);

  auto* streamline_cmd =
      app.add_subcommand("streamline", "Aggregate scales and biases");
  add_graph(streamline_cmd);
  add_ranges(streamline_cmd);
  add_out(streamline_cmd);
  add_report(streamline_cmd);
  add_sampling(streamline_cmd);
  add_streamline_flags(streamline_cmd);

  auto* thr_cmd = app.add_subcommand(
      "thresholdize", "Convert layer tails to MultiThreshold nodes");
  add_graph(thr_cmd);
  add_ranges(thr_cmd);
  add_out(thr_cmd);
  add_report(thr_cmd);

  auto* acc_cmd = app.add_subcommand("accmin", "Accumulator widths");
  add_graph(acc_cmd);
  add_ranges(acc_cmd);
  add_report(acc_cmd);

  auto* cost_cmd = app.add_subcommand("cost", "Layer tail cost model");
  cost_cmd->add_option("--n-i", o.n_i, "Input bits")->check(CLI::PositiveNumber);
  cost_cmd->add_option("--n-p", o.n_p, "Parameter bits")
      ->check(CLI::PositiveNumber);
  cost_cmd->add_option("--n-o", o.n_o, "Output bits")
      ->check(CLI::PositiveNumber);
  cost_cmd->add_option("--channels", o.channels, "Channels")
      ->check(CLI::PositiveNumber);
  cost_cmd->add_option("--pe", o.pe, "Processing elements")
      ->check(CLI::PositiveNumber);
  cost_cmd->add_option("--granularity", o.granularity,
                       "per_channel | per_tensor");
  cost_cmd->add_option("--sweep", o.sweep, "Sweep, e.g. no=2..12 (CSV)");
  cost_cmd->add_flag("--pot", o.pot, "Annotate power-of-two scales");
  add_out(cost_cmd);
  add_report(cost_cmd);

  auto* verify_cmd =
      app.add_subcommand("verify", "Check ranges against sampled execution");
  add_graph(verify_cmd);
  add_ranges(verify_cmd);
  add_report(verify_cmd);
  add_sampling(verify_cmd);

  auto* run_cmd = app.add_subcommand("run", "Interpret the graph once");
  add_graph(run_cmd);
  run_cmd->add_option("--inputs", o.inputs, "Input values JSON file")
      ->check(CLI::ExistingFile);
  add_out(run_cmd);
  add_report(run_cmd);

  auto* pipe_cmd = app.add_subcommand(
      "pipeline", "Streamline, size accumulators, convert tails, verify");
  add_graph(pipe_cmd);
  add_ranges(pipe_cmd);
  add_out(pipe_cmd);
  add_report(pipe_cmd);
  add_sampling(pipe_cmd);
  add_streamline_flags(pipe_cmd);
  pipe_cmd->add_flag("--thresholds", o.thresholds,
                     "Convert layer tails to MultiThreshold nodes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*analyze_cmd) return cmd_analyze(o, out);
    if (*streamline_cmd) return cmd_streamline(o, out);
    if (*thr_cmd) return cmd_thresholdize(o, out);
    if (*acc_cmd) return cmd_accmin(o, out);
    if (*cost_cmd) return cmd_cost(o, out);
    if (*verify_cmd) return cmd_verify(o, out, err);
    if (*run_cmd) return cmd_run(o, out);
    if (*pipe_cmd) return cmd_pipeline(o, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace qrange::cli
