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

#include "qrange/graph.hpp"

namespace qrange {

/// Rewrites compound operators into the analysis operator set:
///   Gemm(A, B, C)             -> MatMul(A, B) -> Add(C)
///   BatchNormalization        -> Mul(gamma / sqrt(var + eps))
///                                -> Add(beta - M * mean)
///   Conv(x, W, b)             -> Conv(x, W) -> Add(b)
///   Div(x, c), c constant     -> Mul(x, 1 / c)
/// A Div by a constant that feeds a unit-scale quantizer (directly or via an
/// Add of a constant) is kept, since it is the explicit form of a quantizer
/// input scale. Throws GraphError for dynamic statistics or divisors.
Graph lower(const Graph& g);

/// Whether `node` is a Quant with scale 1 and zero-point 0.
bool is_unit_quant(const Graph& g, const Node& node);

}  // namespace qrange
