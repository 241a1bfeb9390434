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

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qrange/accmin.hpp"
#include "qrange/costmodel.hpp"
#include "qrange/graph.hpp"
#include "qrange/interpreter.hpp"
#include "qrange/sira.hpp"
#include "qrange/streamline.hpp"
#include "qrange/threshold.hpp"

namespace qrange {

nlohmann::json range_to_json(const ScaledIntRange& r);
nlohmann::json ranges_to_json(const RangeMap& ranges);

/// Reads input ranges of the form
///   {"X": {"lo": ..., "hi": ...}}                         real interval
///   {"X": {"int_lo": ..., "int_hi": ..., "scale": ..., "bias": ...}}
/// where every value is an array literal and scale/bias default to 1/0.
/// Names must be dynamic inputs of `g`; ranges broadcast to their shapes.
RangeMap input_ranges_from_json(const nlohmann::json& doc, const Graph& g);
RangeMap load_input_ranges(const std::filesystem::path& path, const Graph& g);

nlohmann::json accmin_to_json(const AccminReport& report);
nlohmann::json verify_to_json(const VerifyReport& report);
nlohmann::json streamline_to_json(const StreamlineResult& result);
nlohmann::json converted_tails_to_json(
    const std::vector<ConvertedTail>& tails);
nlohmann::json cost_to_json(const CostEstimate& e);

/// CSV with one row per configuration: config fields, both totals, the
/// winner and a crossover flag. `pot` appends a column marking the rows as
/// power-of-two configurations; the estimates themselves are unchanged.
std::string sweep_to_csv(const std::vector<SweepRow>& rows, bool pot = false);

}  // namespace qrange
