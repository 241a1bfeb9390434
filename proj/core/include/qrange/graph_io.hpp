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

#include <nlohmann/json.hpp>

#include "qrange/graph.hpp"

namespace qrange {

/// Parses and validates a graph document. Throws GraphError with the
/// offending node or tensor name on any schema or structural violation.
Graph parse_graph(const std::string& text);
Graph load_graph(const std::filesystem::path& path);

std::string serialize_graph(const Graph& g);
void save_graph(const Graph& g, const std::filesystem::path& path);

nlohmann::json graph_to_json(const Graph& g);
Graph graph_from_json(const nlohmann::json& doc);

/// Array literal: a number (scalar), a possibly nested list, or an object
/// {"shape": [...], "data": [...]}.
NdArray array_from_json(const nlohmann::json& value, const std::string& what);
nlohmann::json array_to_json(const NdArray& a);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path,
                     const std::string& text);

}  // namespace qrange
