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

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "core/noise.hpp"
#include "core/quantizer.hpp"
#include "core/synthetic.hpp"
#include "test_util.hpp"

namespace octav {
namespace {

using testing::ThrowsError;

// Reference quantizer: enumerate the level grid and pick the nearest level,
// ties going to the level of larger magnitude.
double NearestLevel(double x, double s, const QuantSpec& spec) {
  const int half = spec.is_signed() ? (1 << (spec.bits - 1)) : (1 << spec.bits);
  const double step = s / half;
  const int lo = spec.is_signed() ? -half : 0;
  const int hi = (spec.is_signed() && spec.boundary == BoundaryMode::kTwosComplement)
                     ? half - 1
                     : half;
  double best = lo * step;
  for (int k = lo; k <= hi; ++k) {
    const double level = k * step;
    const double d = std::fabs(level - x);
    const double db = std::fabs(best - x);
    if (d < db || (d == db && std::fabs(level) > std::fabs(best))) best = level;
  }
  return best;
}

QuantSpec Spec(int bits, Signedness sg = Signedness::kSigned,
               BoundaryMode bm = BoundaryMode::kMathematical) {
  QuantSpec q;
  q.bits = bits;
  q.signedness = sg;
  q.boundary = bm;
  return q;
}

TEST(QuantSpecTest, BitRange) {
  EXPECT_TRUE(ThrowsError([] { Spec(1).Validate(); }, ErrorCode::kInvalidArgument));
  EXPECT_TRUE(ThrowsError([] { Spec(17).Validate(); }, ErrorCode::kInvalidArgument));
  Spec(2).Validate();
  Spec(16).Validate();
}

TEST(MaxScalarTest, Examples) {
  const Tensor a = Tensor::Vector({-3, 1, 2});
  EXPECT_EQ(MaxScalar(a, MakeGroupView(a, Granularity::PerTensor()), Signedness::kSigned)
                .scalars,
            std::vector<double>{3});
  const Tensor b({1, 2, 3, 8}, {2, 2});
  EXPECT_EQ(MaxScalar(b, MakeGroupView(b, Granularity::PerRow(0)), Signedness::kSigned)
                .scalars,
            (std::vector<double>{2, 8}));
  const Tensor z = Tensor::Vector({0, 0, 0});
  const ScalarSet zs =
      MaxScalar(z, MakeGroupView(z, Granularity::PerTensor()), Signedness::kSigned);
  EXPECT_EQ(zs.scalars, std::vector<double>{0});
  EXPECT_TRUE(zs.degenerate[0]);
}

TEST(RoundHalfAwayTest, AgreesWithStdRound) {
  const double tricky[] = {0.0, -0.0, 0.5, -0.5, 1.5, 2.5, -2.5, 0.49999999999999994,
                           -0.49999999999999994, 4503599627370495.5, 1e15 + 0.5,
                           0x1p52, 0x1p53 + 2.0, 1e30, -1e30};
  for (double v : tricky) {
    if (std::fabs(v) <= 0x1p40) {
      EXPECT_EQ(RoundHalfAway(v), std::round(v)) << std::hexfloat << v;
    } else {
      EXPECT_EQ(RoundHalfAway(v), std::copysign(0x1p40, v));
    }
  }
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-70000.0, 70000.0);
  for (int i = 0; i < 1'000'000; ++i) {
    const double v = u(rng);
    ASSERT_EQ(RoundHalfAway(v), std::round(v)) << std::hexfloat << v;
    const double h = std::floor(v) + 0.5;
    ASSERT_EQ(RoundHalfAway(h), std::round(h)) << std::hexfloat << h;
  }
}

TEST(QuantizeTest, HandExamples) {
  EXPECT_EQ(QuantizeValue(0.6, 1.0, Spec(2)), 0.5);
  for (int b = 2; b <= 16; ++b) {
    EXPECT_EQ(QuantizeValue(1.7, 1.0, Spec(b)), 1.0);
    EXPECT_EQ(QuantizeValue(-1.7, 1.0, Spec(b)), -1.0);
    EXPECT_EQ(QuantizeValue(0.0, 1.0, Spec(b)), 0.0);
    EXPECT_EQ(QuantizeValue(0.0, 1.0, Spec(b, Signedness::kUnsigned)), 0.0);
    EXPECT_EQ(QuantizeValue(0.0, 1.0, Spec(b, Signedness::kSigned,
                                           BoundaryMode::kTwosComplement)),
              0.0);
  }
  // Ties round away from zero: 0.25 sits halfway between 0 and 0.5.
  EXPECT_EQ(QuantizeValue(0.25, 1.0, Spec(2)), 0.5);
  EXPECT_EQ(QuantizeValue(-0.25, 1.0, Spec(2)), -0.5);
}

TEST(QuantizeTest, MatchesNearestLevelReference) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::uniform_real_distribution<double> us(0.1, 3.0);
  for (int bits : {2, 3, 4, 8}) {
    for (auto sg : {Signedness::kSigned, Signedness::kUnsigned}) {
      for (auto bm : {BoundaryMode::kMathematical, BoundaryMode::kTwosComplement}) {
        const QuantSpec spec = Spec(bits, sg, bm);
        for (int i = 0; i < 20000; ++i) {
          double x = u(rng);
          if (sg == Signedness::kUnsigned) x = std::fabs(x);
          const double s = us(rng);
          ASSERT_EQ(QuantizeValue(x, s, spec), NearestLevel(x, s, spec))
              << "x=" << x << " s=" << s << " bits=" << bits;
        }
      }
    }
  }
}

TEST(QuantizeTest, RangeIdempotenceMonotonicity) {
  const Tensor t = SyntheticTensor(Distribution::kGaussian, {64, 32}, 5);
  const GroupView view = MakeGroupView(t, Granularity::PerRow(0));
  for (auto bm : {BoundaryMode::kMathematical, BoundaryMode::kTwosComplement}) {
    const QuantSpec spec = Spec(4, Signedness::kSigned, bm);
    ScalarSet s = MaxScalar(t, view, Signedness::kSigned);
    for (double& v : s.scalars) v *= 0.5;
    const Tensor q = QuantizeClipped(t, s, spec);
    const Tensor qq = QuantizeClipped(q, s, spec);
    EXPECT_TRUE(q == qq);
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double sg = s.scalars[view.GroupOf(i)];
      const double top = bm == BoundaryMode::kMathematical ? sg : sg * 7.0 / 8.0;
      EXPECT_GE(q.data()[i], -sg);
      EXPECT_LE(q.data()[i], top);
    }
    std::vector<double> xs(2001), prev_q;
    for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = -2.0 + 0.002 * i;
    double last = -INFINITY;
    for (double x : xs) {
      const double y = QuantizeValue(x, 1.0, spec);
      EXPECT_LE(last, y);
      last = y;
    }
  }
}

TEST(QuantizeTest, UnsignedStepIsHalfTheSignedStep) {
  for (int b = 2; b <= 16; ++b) {
    EXPECT_EQ(Spec(b, Signedness::kUnsigned).StepFraction() * 2.0, Spec(b).StepFraction());
  }
}

TEST(QuantizeTest, Errors) {
  const Tensor t = Tensor::Vector({-1.0, 0.5});
  const GroupView view = MakeGroupView(t, Granularity::PerTensor());
  ScalarSet s{{1.0}, {false}, view};
  EXPECT_TRUE(ThrowsError([&] { QuantizeClipped(t, s, Spec(4, Signedness::kUnsigned)); },
                          ErrorCode::kInvalidArgument, "negative value at index 0"));
  s.scalars = {-1.0};
  EXPECT_TRUE(ThrowsError([&] { QuantizeClipped(t, s, Spec(4)); },
                          ErrorCode::kInvalidArgument, "non-positive scalar"));
  s.scalars = {0.0};
  EXPECT_TRUE(ThrowsError([&] { QuantizeClipped(t, s, Spec(4)); },
                          ErrorCode::kInvalidArgument, "non-positive scalar"));
}

TEST(QuantizeTest, AllZeroGroupPassesThrough) {
  const Tensor t({0, 0, 1, -2}, {2, 2});
  const auto [q, s] = QuantizeMaxScaled(t, MakeGroupView(t, Granularity::PerRow(0)), Spec(4));
  EXPECT_TRUE(s.degenerate[0]);
  EXPECT_EQ(q.data()[0], 0.0);
  EXPECT_EQ(q.data()[1], 0.0);
  EXPECT_EQ(q.data()[3], -2.0);
}

TEST(QuantizeTest, MaxScaledNeverClipsAndFixesGridValues) {
  const Tensor t = SyntheticTensor(Distribution::kLaplace, {1000}, 9);
  const QuantSpec spec = Spec(6);
  const auto [q, s] = QuantizeMaxScaled(t, MakeGroupView(t, Granularity::PerTensor()), spec);
  const double half_step = 0.5 * s.scalars[0] * spec.StepFraction();
  for (std::size_t i = 0; i < t.size(); ++i) {
    EXPECT_LE(std::fabs(q.data()[i] - t.data()[i]), half_step * (1 + 1e-12));
  }
  const auto [q2, s2] = QuantizeMaxScaled(q, MakeGroupView(q, Granularity::PerTensor()), spec);
  EXPECT_EQ(s2.scalars, s.scalars);
  EXPECT_TRUE(q2 == q);
}

TEST(QuantizeTest, MaxScaledMseMatchesUniformNoiseFormula) {
  for (int bits : {4, 8}) {
    const Tensor t = SyntheticTensor(Distribution::kUniform, {1'000'000}, 21);
    const auto [q, s] =
        QuantizeMaxScaled(t, MakeGroupView(t, Granularity::PerTensor()), Spec(bits));
    const double mse = EmpiricalMse(t.data(), s.scalars[0], Spec(bits));
    const double model = s.scalars[0] * s.scalars[0] * std::pow(4.0, -bits) / 3.0;
    EXPECT_NEAR(mse / model, 1.0, 0.05) << bits;

    const Tensor u = SyntheticTensor(Distribution::kHalfUniform, {1'000'000}, 22);
    const QuantSpec us = Spec(bits, Signedness::kUnsigned);
    const auto [qu, su] = QuantizeMaxScaled(u, MakeGroupView(u, Granularity::PerTensor()), us);
    const double mse_u = EmpiricalMse(u.data(), su.scalars[0], us);
    const double model_u = su.scalars[0] * su.scalars[0] * std::pow(4.0, -bits) / 12.0;
    EXPECT_NEAR(mse_u / model_u, 1.0, 0.05) << bits;
  }
}

}  // namespace
}  // namespace octav
