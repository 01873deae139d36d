/* Copyright 2026 The Octav Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#ifndef OCTAV_CORE_ESTIMATORS_HPP_
#define OCTAV_CORE_ESTIMATORS_HPP_

#include <span>
#include <vector>

#include "core/quantizer.hpp"
#include "core/tensor.hpp"

namespace octav {

// Backward rule of a fake-quantization node.
//   kSte: 1 everywhere.
//   kPwl: 1 on the in-range set, 0 on clipped inputs.
//   kMad: 1 on the in-range set, s/|x| on clipped inputs.
// The in-range set is |x| <= s signed and x <= s unsigned; the boundary
// belongs to it.
enum class EstimatorKind { kSte, kPwl, kMad };

// Weights and activations may use different rules. The default pairing is
// the MAD/PWL hybrid.
struct MphPolicy {
  EstimatorKind weights = EstimatorKind::kMad;
  EstimatorKind activations = EstimatorKind::kPwl;
};

// 1 on the in-range set, s/|x| (unsigned: s/x) beyond it. Computed in long
// double so that the product with x reproduces the clipped value exactly once
// rounded back to double: static_cast<double>(Attenuation(x, s) * x) equals
// clip(x, -s, s) for every finite x and s > 0.
long double Attenuation(double x, double s, Signedness signedness);

// Derivative of the quantizer at x under `kind`.
double BackwardScale(double x, double s, EstimatorKind kind, Signedness signedness);

// Quantized values and the element-wise backward multipliers.
struct FakeQuantBuffers {
  std::vector<double> forward;
  std::vector<double> backward_mask;
};

void FakeQuant(std::span<const double> in, const GroupView& view,
               std::span<const double> scalars, const QuantSpec& spec,
               EstimatorKind kind, std::span<double> forward,
               std::span<double> backward_mask);

FakeQuantBuffers FakeQuant(std::span<const double> in, const GroupView& view,
                           std::span<const double> scalars, const QuantSpec& spec,
                           EstimatorKind kind);

struct FakeQuantResult {
  Tensor forward;
  Tensor backward_mask;
};

FakeQuantResult FakeQuant(const Tensor& t, const ScalarSet& scalars,
                          const QuantSpec& spec, EstimatorKind kind);

}  // namespace octav

#endif  // OCTAV_CORE_ESTIMATORS_HPP_
