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
#include "core/estimators.hpp"

#include <cmath>
#include <string>

#include "core/error.hpp"

namespace octav {
namespace {

double MagnitudeOf(double x, Signedness signedness) {
  return signedness == Signedness::kSigned ? std::fabs(x) : x;
}

}  // namespace

long double Attenuation(double x, double s, Signedness signedness) {
  const double m = MagnitudeOf(x, signedness);
  if (m <= s) return 1.0L;
  return static_cast<long double>(s) / static_cast<long double>(std::fabs(x));
}

double BackwardScale(double x, double s, EstimatorKind kind, Signedness signedness) {
  switch (kind) {
    case EstimatorKind::kSte:
      return 1.0;
    case EstimatorKind::kPwl:
      return MagnitudeOf(x, signedness) <= s ? 1.0 : 0.0;
    case EstimatorKind::kMad:
      return static_cast<double>(Attenuation(x, s, signedness));
  }
  return 1.0;
}

void FakeQuant(std::span<const double> in, const GroupView& view,
               std::span<const double> scalars, const QuantSpec& spec,
               EstimatorKind kind, std::span<double> forward,
               std::span<double> backward_mask) {
  Require(backward_mask.size() == in.size(), "mask buffer size mismatch");
  QuantizeClipped(in, view, scalars, spec, forward);
  for (std::size_t g = 0; g < view.group_count(); ++g) {
    const double s = scalars[g];
    if (s == 0.0) {
      // All-zero group: nothing is clipped.
      view.ForEachIndex(g, [&](std::size_t i) { backward_mask[i] = 1.0; });
      continue;
    }
    view.ForEachIndex(g, [&](std::size_t i) {
      backward_mask[i] = BackwardScale(in[i], s, kind, spec.signedness);
    });
  }
}

FakeQuantBuffers FakeQuant(std::span<const double> in, const GroupView& view,
                           std::span<const double> scalars, const QuantSpec& spec,
                           EstimatorKind kind) {
  FakeQuantBuffers out{std::vector<double>(in.size()), std::vector<double>(in.size())};
  FakeQuant(in, view, scalars, spec, kind, out.forward, out.backward_mask);
  return out;
}

FakeQuantResult FakeQuant(const Tensor& t, const ScalarSet& scalars,
                          const QuantSpec& spec, EstimatorKind kind) {
  const GroupView view = MakeGroupView(t, scalars.view.granularity());
  Require(view.group_count() == scalars.size(),
          "scalar set was built for a different shape");
  FakeQuantBuffers b = FakeQuant(t.data(), view, scalars.scalars, spec, kind);
  return {Tensor(std::move(b.forward), t.shape(), t.storage()),
          Tensor(std::move(b.backward_mask), t.shape())};
}

}  // namespace octav
