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
#ifndef OCTAV_CORE_NOISE_HPP_
#define OCTAV_CORE_NOISE_HPP_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "core/quantizer.hpp"
#include "core/tensor.hpp"

namespace octav {

inline constexpr std::size_t kDefaultHistogramBins = 4096;
inline constexpr std::size_t kDefaultSweepPoints = 100;

enum class CurveSource { kEmpirical, kAnalytical };

// Sampled clipping-MSE curve. Scalars are strictly increasing and positive.
struct MseCurve {
  std::vector<double> scalars;
  std::vector<double> mse;
  CurveSource source = CurveSource::kEmpirical;

  std::size_t size() const noexcept { return scalars.size(); }
  // Index of the smallest MSE; the first one on ties.
  std::size_t ArgMin() const;
};

// Indices i with mse[i] < mse[i-1] and mse[i] <= mse[i+1]; the endpoints use
// only the neighbour they have. Requires at least 3 points.
std::vector<std::size_t> LocalMinima(const MseCurve& curve);

// "scalar,mse" header followed by one row per sample, 17 significant digits.
void WriteCurveCsv(const MseCurve& curve, std::ostream& os);

// Histogram of nonzero magnitudes (|x| for signed data, x for unsigned).
// Zeros are not counted. Within a bin the density is taken as uniform; a bin
// with lower == upper is a point mass.
class Histogram {
 public:
  struct Bin {
    double lower;
    double upper;
    std::uint64_t count;
  };

  // Moments of the normalized distribution split at a clipping scalar s.
  struct Split {
    double in_mass = 0.0;    // P(0 < m <= s)
    double out_mass = 0.0;   // P(m > s)
    double out_first = 0.0;  // E[m 1{m > s}]
    double out_cost = 0.0;   // E[(m - s)^2 1{m > s}]
  };

  // `bins` equal-width bins over [0, max magnitude]. Throws
  // Error(kDegenerate) when every value is zero.
  static Histogram Build(std::span<const double> values, std::size_t bins,
                         Signedness signedness);

  // One point-mass bin per distinct nonzero magnitude: the exact empirical
  // distribution of `values`.
  static Histogram Exact(std::span<const double> values, Signedness signedness);

  const std::vector<Bin>& bins() const noexcept { return bins_; }
  std::vector<std::uint64_t> counts() const;
  std::uint64_t total() const noexcept { return total_; }
  Signedness signedness() const noexcept { return signedness_; }

  Split SplitAt(double s) const;

 private:
  std::vector<Bin> bins_;
  std::uint64_t total_ = 0;
  Signedness signedness_ = Signedness::kSigned;
};

// Mean of (Q(x) - x)^2 over `group`, quantized with scalar s. A zero scalar
// is accepted only for an all-zero group, whose MSE is 0.
double EmpiricalMse(std::span<const double> group, double s, const QuantSpec& spec);

// Per-group empirical MSE.
std::vector<double> EmpiricalMse(const Tensor& t, const ScalarSet& scalars,
                                 const QuantSpec& spec);

// Element-weighted mean of the per-group MSE.
double OverallMse(const ScalarSet& scalars, std::span<const double> per_group);

// Clipping MSE predicted from a histogram under the additive noise model:
//   c s^2 P(m <= s) + E[(m - s)^2 1{m > s}],
// c = spec.NoiseCoefficient(). Throws unless s > 0.
double AnalyticalMse(const Histogram& h, double s, const QuantSpec& spec);

struct SweepOptions {
  std::size_t points = kDefaultSweepPoints;
  CurveSource mode = CurveSource::kEmpirical;
  std::size_t histogram_bins = kDefaultHistogramBins;
  int threads = 1;
};

// Curve sampled at k/points * s_max for k = 1..points, where s_max is the
// group's max magnitude. Throws Error(kDegenerate) for an all-zero group.
MseCurve SweepGroup(std::span<const double> group, const QuantSpec& spec,
                    const SweepOptions& options);

std::vector<MseCurve> Sweep(const Tensor& t, const GroupView& view,
                            const QuantSpec& spec, const SweepOptions& options);

// Per group, the p-th percentile (0 < p <= 100) of |x| by linear
// interpolation between order statistics; p = 100 is the max magnitude.
double PercentileMagnitude(std::span<const double> group, double p);
ScalarSet PercentileMagnitude(const Tensor& t, const GroupView& view, double p);

}  // namespace octav

#endif  // OCTAV_CORE_NOISE_HPP_
