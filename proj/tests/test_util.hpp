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
#include <random>
#include <string>

#include "qrange/graph.hpp"
#include "qrange/interpreter.hpp"

namespace qrange::testing {

inline std::filesystem::path sample_path(const std::string& name) {
  return std::filesystem::path(QRANGE_SAMPLES_DIR) / name;
}

/// Uniform random values for every dynamic input in [lo, hi].
inline TensorMap random_inputs(const Graph& g, std::mt19937_64& rng,
                               double lo, double hi) {
  TensorMap m;
  std::uniform_real_distribution<double> d(lo, hi);
  for (const auto& name : g.inputs()) {
    const Shape& s = g.tensor(name).shape;
    std::vector<double> v(static_cast<std::size_t>(num_elements(s)));
    for (double& x : v) x = d(rng);
    m.emplace(name, NdArray(s, std::move(v)));
  }
  return m;
}

}  // namespace qrange::testing
