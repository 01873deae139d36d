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
#ifndef OCTAV_CORE_QUANTIZER_HPP_
#define OCTAV_CORE_QUANTIZER_HPP_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "core/tensor.hpp"

namespace octav {

enum class Signedness { kSigned, kUnsigned };

// kMathematical keeps both +s and -s as levels (2^B + 1 levels signed).
// kTwosComplement drops the top positive level of the signed grid, the way a
// B-bit two's-complement integer would.
enum class BoundaryMode { kMathematical, kTwosComplement };

enum class Rounding { kHalfAwayFromZero };

inline constexpr int kMinBits = 2;
inline constexpr int kMaxBits = 16;

struct QuantSpec {
  int bits = 4;
  Signedness signedness = Signedness::kSigned;
  BoundaryMode boundary = BoundaryMode::kMathematical;
  Rounding rounding = Rounding::kHalfAwayFromZero;

  // Throws Error(kInvalidArgument) when bits is outside [kMinBits, kMaxBits].
  void Validate() const;

  bool is_signed() const noexcept { return signedness == Signedness::kSigned; }

  // Grid step as a fraction of the clipping scalar: 2^(1-B) signed,
  // 2^(-B) unsigned.
  double StepFraction() const noexcept {
    return std::ldexp(1.0, is_signed() ? 1 - bits : -bits);
  }

  // Additive-model discretization noise per unit s^2: 4^-B/3 signed,
  // 4^-B/12 unsigned.
  double NoiseCoefficient() const noexcept {
    return std::ldexp(1.0, -2 * bits) / (is_signed() ? 3.0 : 12.0);
  }

  // Largest / smallest integer level index.
  double MaxLevel() const noexcept {
    const double top = std::ldexp(1.0, is_signed() ? bits - 1 : bits);
    return (is_signed() && boundary == BoundaryMode::kTwosComplement) ? top - 1
                                                                      : top;
  }
  double MinLevel() const noexcept {
    return is_signed() ? -std::ldexp(1.0, bits - 1) : 0.0;
  }
};

// One clipping scalar per scaling group. A scalar of 0 is only legal for a
// group whose elements are all zero; such groups carry degenerate = true.
struct ScalarSet {
  std::vector<double> scalars;
  std::vector<bool> degenerate;
  GroupView view;

  std::size_t size() const noexcept { return scalars.size(); }
};

// Round half away from zero. Exact for every double: magnitudes are capped
// at 2^40, far beyond the largest level index. Adding and subtracting 2^52
// rounds to nearest even; a - r is exact, and a tie that went down is
// moved up. Branch-free so that element loops vectorize.
inline double RoundHalfAway(double v) noexcept {
  double a = std::fabs(v);
  a = a > 0x1p40 ? 0x1p40 : a;
  double r = (a + 0x1p52) - 0x1p52;
  r += (a - r == 0.5) ? 1.0 : 0.0;
  return std::copysign(r, v);
}

// Clipped uniform quantizer for one scalar s > 0, with the grid constants
// hoisted out of the element loop. The output is level * (s * StepFraction())
// with the level clamped to [MinLevel(), MaxLevel()], so it always sits
// exactly on the grid.
class GridQuantizer {
 public:
  GridQuantizer(double s, const QuantSpec& spec) noexcept
      : s_(s),
        levels_(std::ldexp(1.0, spec.is_signed() ? spec.bits - 1 : spec.bits)),
        step_(s * spec.StepFraction()),
        max_level_(spec.MaxLevel()),
        min_level_(spec.MinLevel()) {}

  double operator()(double x) const noexcept {
    double level = RoundHalfAway(x * levels_ / s_);
    if (level > max_level_) level = max_level_;
    if (level < min_level_) level = min_level_;
    return level * step_;
  }

 private:
  double s_;
  double levels_;
  double step_;
  double max_level_;
  double min_level_;
};

inline double QuantizeValue(double x, double s, const QuantSpec& spec) noexcept {
  return GridQuantizer(s, spec)(x);
}

// Throws unless an unsigned spec is only paired with nonnegative data.
void CheckSignedness(std::span<const double> data, Signedness signedness);

// Per group: max |x| (signed) or max x (unsigned). All-zero groups yield 0
// and are flagged degenerate.
ScalarSet MaxScalar(const Tensor& t, const GroupView& view, Signedness signedness);

// Throws Error(kInvalidArgument) on a negative or non-finite scalar, a zero
// scalar on a group that is not all zeros, a scalar count that does not
// match the view, or unsigned spec on negative data.
Tensor QuantizeClipped(const Tensor& t, const ScalarSet& scalars,
                       const QuantSpec& spec);

// Span form used by the training harness; `out` may alias nothing in `in`.
void QuantizeClipped(std::span<const double> in, const GroupView& view,
                     std::span<const double> scalars, const QuantSpec& spec,
                     std::span<double> out);

std::pair<Tensor, ScalarSet> QuantizeMaxScaled(const Tensor& t,
                                               const GroupView& view,
                                               const QuantSpec& spec);

}  // namespace octav

#endif  // OCTAV_CORE_QUANTIZER_HPP_
