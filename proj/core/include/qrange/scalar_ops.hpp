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

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace qrange {

/// Elementwise operator tags shared by interval propagation and concrete
/// execution, so both evaluate exactly the same floating-point expressions.
enum class ElementwiseFn { relu, add, mul, div, sub, max, min, sigmoid, identity };

inline int arity(ElementwiseFn f) {
  switch (f) {
    case ElementwiseFn::relu:
    case ElementwiseFn::sigmoid:
    case ElementwiseFn::identity:
      return 1;
    default:
      return 2;
  }
}

inline double apply(ElementwiseFn f, double a, double b = 0.0) {
  switch (f) {
    case ElementwiseFn::relu:
      return a > 0.0 ? a : 0.0;
    case ElementwiseFn::add:
      return a + b;
    case ElementwiseFn::mul:
      return a * b;
    case ElementwiseFn::div:
      return a / b;
    case ElementwiseFn::sub:
      return a - b;
    case ElementwiseFn::max:
      return std::max(a, b);
    case ElementwiseFn::min:
      return std::min(a, b);
    case ElementwiseFn::sigmoid:
      return 1.0 / (1.0 + std::exp(-a));
    case ElementwiseFn::identity:
      return a;
  }
  return a;
}

/// Integer code of a quantizer: clip(round_half_even(x / s + z), qmin, qmax).
/// std::nearbyint honours the default FE_TONEAREST mode (ties to even).
inline double quantize_code(double x, double s, double z, double qmin,
                            double qmax) {
  return std::clamp(std::nearbyint(x / s + z), qmin, qmax);
}

inline double dequantize(double q, double s, double z) { return s * (q - z); }

inline double quantize(double x, double s, double z, double qmin,
                       double qmax) {
  return dequantize(quantize_code(x, s, z, qmin, qmax), s, z);
}

}  // namespace qrange
