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
#ifndef OCTAV_CORE_SOLVER_HPP_
#define OCTAV_CORE_SOLVER_HPP_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "core/noise.hpp"
#include "core/quantizer.hpp"
#include "core/tensor.hpp"

namespace octav {

// Starting point of the recursion.
struct OctavInit {
  enum class Kind {
    kMeanAbsNonzero,  // sum |x| / #{x != 0}
    kFromValue,       // a caller-supplied positive value
    kMaxScalar,       // max |x|
    kStdMultiple,     // k * population standard deviation
  };

  Kind kind = Kind::kMeanAbsNonzero;
  double value = 0.0;  // s1 for kFromValue, k for kStdMultiple.

  static OctavInit MeanAbsNonzero() { return {}; }
  static OctavInit FromValue(double s1) { return {Kind::kFromValue, s1}; }
  static OctavInit MaxScalar() { return {Kind::kMaxScalar, 0.0}; }
  static OctavInit StdMultiple(double k) { return {Kind::kStdMultiple, k}; }
};

inline constexpr int kDefaultOctavIterations = 10;

struct OctavConfig {
  int iterations = kDefaultOctavIterations;
  OctavInit init;
  // Diagnostic only: a group is reported converged when its last step moved
  // by at most convergence_tol * s_n. The iteration count is always exact.
  double convergence_tol = 1e-3;
  // Groups are independent and may be solved concurrently.
  int threads = 1;

  void Validate() const;
};

struct GroupTrace {
  std::vector<double> iterates;  // s_1 .. s_{iterations+1}
  bool converged = false;
  bool degenerate = false;

  double final() const { return iterates.empty() ? 0.0 : iterates.back(); }
};

struct OctavTrace {
  std::vector<GroupTrace> groups;

  // {"groups": [{"group": g, "iterates": [...], "converged": b,
  //              "degenerate": b}, ...]}
  std::string ToJson() const;
};

struct OctavResult {
  ScalarSet scalars;
  OctavTrace trace;
};

// One raw Newton-Raphson step on the empirical distribution of `group`:
//
//   s_{n+1} = sum |x| 1{|x| > s_n} / (c #{0 < |x| <= s_n} + #{|x| > s_n})
//
// with c = spec.NoiseCoefficient(); unsigned specs use x in place of |x|.
// Zeros never enter the discretization count. s_n may be 0, in which case
// the result is the mean nonzero magnitude. Returns 0 when nothing exceeds
// s_n. Throws Error(kDegenerate) for an all-zero group.
double OctavStep(std::span<const double> group, double s_n, const QuantSpec& spec);

// s_1 for the given strategy, before clamping.
double InitialScalar(std::span<const double> group, const OctavInit& init,
                     Signedness signedness);

// Runs exactly config.iterations steps. An iterate below 1e-12 * s_max
// (including the 0 returned when nothing is clipped) is replaced by the
// group's smallest nonzero magnitude.
GroupTrace SolveGroup(std::span<const double> group, const QuantSpec& spec,
                      const OctavConfig& config);

// Per-group solve. Degenerate groups get scalar 0 and degenerate = true.
OctavResult Octav(const Tensor& t, const GroupView& view, const QuantSpec& spec,
                  const OctavConfig& config = {});

struct MseDerivatives {
  double first;   // J'(s)
  double second;  // J''(s), always > 0
};

// J'(s)  = 2c s P(m <= s) + 2 E[(s - m) 1{m > s}]
// J''(s) = 2c P(m <= s) + 2 P(m > s)
// evaluated on the histogram's distribution.
MseDerivatives MseDerivativesAt(const Histogram& h, double s, const QuantSpec& spec);

}  // namespace octav

#endif  // OCTAV_CORE_SOLVER_HPP_
