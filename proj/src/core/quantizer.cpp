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
#include "core/quantizer.hpp"

#include <algorithm>
#include <string>

#include "core/error.hpp"

namespace octav {

void QuantSpec::Validate() const {
  if (bits < kMinBits || bits > kMaxBits) {
    Fail(ErrorCode::kInvalidArgument,
         "bits must be in [" + std::to_string(kMinBits) + ", " +
             std::to_string(kMaxBits) + "], got " + std::to_string(bits));
  }
}

void CheckSignedness(std::span<const double> data, Signedness signedness) {
  if (signedness == Signedness::kSigned) return;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data[i] < 0.0) {
      Fail(ErrorCode::kInvalidArgument,
           "unsigned quantization of negative value at index " +
               std::to_string(i));
    }
  }
}

ScalarSet MaxScalar(const Tensor& t, const GroupView& view,
                    Signedness signedness) {
  CheckSignedness(t.data(), signedness);
  ScalarSet out;
  out.view = view;
  out.scalars.assign(view.group_count(), 0.0);
  out.degenerate.assign(view.group_count(), false);
  const auto data = t.data();
  for (std::size_t g = 0; g < view.group_count(); ++g) {
    double m = 0.0;
    view.ForEachIndex(g, [&](std::size_t i) { m = std::max(m, std::fabs(data[i])); });
    out.scalars[g] = m;
    out.degenerate[g] = (m == 0.0);
  }
  return out;
}

void QuantizeClipped(std::span<const double> in, const GroupView& view,
                     std::span<const double> scalars, const QuantSpec& spec,
                     std::span<double> out) {
  spec.Validate();
  Require(scalars.size() == view.group_count(),
          "scalar count " + std::to_string(scalars.size()) +
              " does not match group count " +
              std::to_string(view.group_count()));
  Require(in.size() == view.total_size() && out.size() == in.size(),
          "buffer size does not match group view");
  CheckSignedness(in, spec.signedness);
  for (std::size_t g = 0; g < view.group_count(); ++g) {
    const double s = scalars[g];
    if (!std::isfinite(s) || s < 0.0) {
      Fail(ErrorCode::kInvalidArgument,
           "non-positive scalar for group " + std::to_string(g));
    }
    if (s == 0.0) {
      view.ForEachIndex(g, [&](std::size_t i) {
        if (in[i] != 0.0) {
          Fail(ErrorCode::kInvalidArgument,
               "non-positive scalar for group " + std::to_string(g));
        }
        out[i] = 0.0;
      });
      continue;
    }
    const GridQuantizer q(s, spec);
    view.ForEachIndex(g, [&](std::size_t i) { out[i] = q(in[i]); });
  }
}

Tensor QuantizeClipped(const Tensor& t, const ScalarSet& scalars,
                       const QuantSpec& spec) {
  const GroupView view = MakeGroupView(t, scalars.view.granularity());
  Require(view.group_count() == scalars.view.group_count(),
          "scalar set was built for a different shape");
  std::vector<double> out(t.size());
  QuantizeClipped(t.data(), view, scalars.scalars, spec, out);
  return Tensor(std::move(out), t.shape(), t.storage());
}

std::pair<Tensor, ScalarSet> QuantizeMaxScaled(const Tensor& t,
                                               const GroupView& view,
                                               const QuantSpec& spec) {
  ScalarSet scalars = MaxScalar(t, view, spec.signedness);
  Tensor q = QuantizeClipped(t, scalars, spec);
  return {std::move(q), std::move(scalars)};
}

}  // namespace octav
