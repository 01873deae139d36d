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
#include "core/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "core/error.hpp"
#include "core/reduce.hpp"
#include "json.hpp"

namespace octav {
namespace {

constexpr double kClampRatio = 1e-12;

struct StepSums {
  double clipped_sum = 0.0;
  std::size_t in_range = 0;
  std::size_t clipped = 0;
  bool negative = false;

  StepSums operator+(const StepSums& o) const {
    return {clipped_sum + o.clipped_sum, in_range + o.in_range,
            clipped + o.clipped, negative || o.negative};
  }
};

template <bool kSigned>
StepSums SumStep(std::span<const double> group, double s) {
  return PairwiseReduce<StepSums>(0, group.size(), [&](std::size_t b, std::size_t e) {
    StepSums acc;
    for (std::size_t i = b; i < e; ++i) {
      const double m = kSigned ? std::fabs(group[i]) : group[i];
      if constexpr (!kSigned) acc.negative |= m < 0.0;
      if (m > s) {
        acc.clipped_sum += m;
        ++acc.clipped;
      } else if (m != 0.0) {
        ++acc.in_range;
      }
    }
    return acc;
  });
}

struct GroupStats {
  double max_magnitude = 0.0;
  double min_nonzero = std::numeric_limits<double>::infinity();
};

GroupStats Stats(std::span<const double> group) {
  GroupStats st;
  for (const double x : group) {
    const double m = std::fabs(x);
    st.max_magnitude = std::max(st.max_magnitude, m);
    if (m != 0.0) st.min_nonzero = std::min(st.min_nonzero, m);
  }
  return st;
}

double Clamp(double s, const GroupStats& st) {
  return s < kClampRatio * st.max_magnitude ? st.min_nonzero : s;
}

}  // namespace

void OctavConfig::Validate() const {
  Require(iterations >= 1, "iterations must be at least 1");
  Require(convergence_tol >= 0.0, "convergence tolerance must be nonnegative");
  if (init.kind == OctavInit::Kind::kFromValue) {
    Require(init.value > 0.0 && std::isfinite(init.value),
            "initial scalar must be positive");
  }
  if (init.kind == OctavInit::Kind::kStdMultiple) {
    Require(init.value > 0.0 && std::isfinite(init.value),
            "standard-deviation multiple must be positive");
  }
}

std::string OctavTrace::ToJson() const {
  nlohmann::json groups_json = nlohmann::json::array();
  for (std::size_t g = 0; g < groups.size(); ++g) {
    groups_json.push_back({{"group", g},
                           {"iterates", groups[g].iterates},
                           {"converged", groups[g].converged},
                           {"degenerate", groups[g].degenerate}});
  }
  return nlohmann::json{{"groups", std::move(groups_json)}}.dump();
}

double OctavStep(std::span<const double> group, double s_n, const QuantSpec& spec) {
  Require(s_n >= 0.0 && std::isfinite(s_n), "octav_step needs s_n >= 0");
  const StepSums sums = spec.is_signed() ? SumStep<true>(group, s_n)
                                         : SumStep<false>(group, s_n);
  if (sums.negative) {
    Fail(ErrorCode::kInvalidArgument, "unsigned quantization of negative data");
  }
  if (sums.in_range + sums.clipped == 0) {
    Fail(ErrorCode::kDegenerate, "all-zero group");
  }
  const double denom = spec.NoiseCoefficient() * static_cast<double>(sums.in_range) +
                       static_cast<double>(sums.clipped);
  if (!(denom > 0.0)) Fail(ErrorCode::kInternal, "zero OCTAV denominator");
  return sums.clipped_sum / denom;
}

double InitialScalar(std::span<const double> group, const OctavInit& init,
                     Signedness signedness) {
  CheckSignedness(group, signedness);
  switch (init.kind) {
    case OctavInit::Kind::kFromValue:
      return init.value;
    case OctavInit::Kind::kMaxScalar:
      return Stats(group).max_magnitude;
    case OctavInit::Kind::kMeanAbsNonzero: {
      const double sum =
          PairwiseSum(group.size(), [&](std::size_t i) { return std::fabs(group[i]); });
      const auto nonzero = static_cast<double>(
          std::count_if(group.begin(), group.end(), [](double x) { return x != 0.0; }));
      if (nonzero == 0.0) Fail(ErrorCode::kDegenerate, "all-zero group");
      return sum / nonzero;
    }
    case OctavInit::Kind::kStdMultiple: {
      const double n = static_cast<double>(group.size());
      const double mean = ReduceSum(group) / n;
      const double var = PairwiseSum(group.size(), [&](std::size_t i) {
                           const double d = group[i] - mean;
                           return d * d;
                         }) / n;
      return init.value * std::sqrt(var);
    }
  }
  Fail(ErrorCode::kInternal, "unknown init kind");
}

GroupTrace SolveGroup(std::span<const double> group, const QuantSpec& spec,
                      const OctavConfig& config) {
  spec.Validate();
  config.Validate();
  GroupTrace trace;
  const GroupStats st = Stats(group);
  if (st.max_magnitude == 0.0) {
    trace.degenerate = true;
    return trace;
  }
  trace.iterates.reserve(config.iterations + 1);
  double s = Clamp(InitialScalar(group, config.init, spec.signedness), st);
  trace.iterates.push_back(s);
  for (int n = 0; n < config.iterations; ++n) {
    s = Clamp(OctavStep(group, s, spec), st);
    trace.iterates.push_back(s);
  }
  const double prev = trace.iterates[trace.iterates.size() - 2];
  trace.converged = std::fabs(s - prev) <= config.convergence_tol * prev;
  return trace;
}

OctavResult Octav(const Tensor& t, const GroupView& view, const QuantSpec& spec,
                  const OctavConfig& config) {
  spec.Validate();
  config.Validate();
  const GroupedData groups(t.data(), view);
  OctavResult result;
  result.trace.groups.resize(groups.size());

  const std::size_t workers = std::min<std::size_t>(
      groups.size(), static_cast<std::size_t>(std::max(config.threads, 1)));
  if (workers <= 1) {
    for (std::size_t g = 0; g < groups.size(); ++g) {
      result.trace.groups[g] = SolveGroup(groups[g], spec, config);
    }
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t g = w; g < groups.size(); g += workers) {
            result.trace.groups[g] = SolveGroup(groups[g], spec, config);
          }
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  result.scalars.view = view;
  for (const GroupTrace& g : result.trace.groups) {
    result.scalars.scalars.push_back(g.final());
    result.scalars.degenerate.push_back(g.degenerate);
  }
  return result;
}

MseDerivatives MseDerivativesAt(const Histogram& h, double s, const QuantSpec& spec) {
  Require(s > 0.0 && std::isfinite(s), "mse_derivatives needs s > 0");
  Require(h.signedness() == spec.signedness,
          "histogram and spec disagree on signedness");
  const Histogram::Split split = h.SplitAt(s);
  const double c = spec.NoiseCoefficient();
  return {2.0 * c * s * split.in_mass + 2.0 * (s * split.out_mass - split.out_first),
          2.0 * c * split.in_mass + 2.0 * split.out_mass};
}

}  // namespace octav
