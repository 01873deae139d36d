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

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "core/noise.hpp"
#include "core/synthetic.hpp"
#include "test_util.hpp"

namespace octav {
namespace {

using testing::ThrowsError;

QuantSpec Signed(int bits) {
  QuantSpec q;
  q.bits = bits;
  return q;
}

QuantSpec Unsigned(int bits) {
  QuantSpec q = Signed(bits);
  q.signedness = Signedness::kUnsigned;
  return q;
}

TEST(EmpiricalMseTest, Examples) {
  // Points of the 3-bit grid of s = 1 (step 0.25).
  const std::vector<double> on_grid{0.5, -0.25, 1.0, 0.0};
  EXPECT_EQ(EmpiricalMse(on_grid, 1.0, Signed(3)), 0.0);
  for (int b : {2, 4, 8}) {
    EXPECT_EQ(EmpiricalMse(std::vector<double>{2.0}, 1.0, Signed(b)), 1.0);
  }
  const std::vector<double> u = Sample(Distribution::kUniform, 1'000'000, 4);
  EXPECT_NEAR(EmpiricalMse(u, 1.0, Signed(4)) / (std::pow(4.0, -4) / 3.0), 1.0, 0.05);
}

TEST(EmpiricalMseTest, PerGroupAndOverall) {
  const Tensor t({2.0, 0.0, 0.5, 0.5}, {2, 2});
  const GroupView view = MakeGroupView(t, Granularity::PerRow(0));
  const ScalarSet s{{1.0, 0.5}, {false, false}, view};
  const std::vector<double> per = EmpiricalMse(t, s, Signed(4));
  EXPECT_EQ(per, (std::vector<double>{0.5, 0.0}));
  EXPECT_EQ(OverallMse(s, per), 0.25);
}

TEST(HistogramTest, Examples) {
  const Histogram a = Histogram::Build(std::vector<double>{1, 1, 1}, 2, Signedness::kSigned);
  EXPECT_EQ(a.counts(), (std::vector<std::uint64_t>{0, 3}));
  const Histogram b = Histogram::Build(std::vector<double>{0, 0, 5}, 5, Signedness::kSigned);
  EXPECT_EQ(b.total(), 1u);
  EXPECT_EQ(b.bins().front().lower, 0.0);
  EXPECT_EQ(b.bins().back().upper, 5.0);
  EXPECT_TRUE(ThrowsError(
      [] { Histogram::Build(std::vector<double>{0, 0}, 4, Signedness::kSigned); },
      ErrorCode::kDegenerate, "all-zero"));
  EXPECT_TRUE(ThrowsError(
      [] { Histogram::Build(std::vector<double>{1}, 1, Signedness::kSigned); },
      ErrorCode::kInvalidArgument));
}

TEST(HistogramTest, GaussianMagnitudesFollowFoldedNormal) {
  const std::vector<double> x = Sample(Distribution::kGaussian, 1'000'000, 8);
  const Histogram h = Histogram::Build(x, 4096, Signedness::kSigned);
  ASSERT_EQ(h.total(), x.size());
  // Merge into 64 coarse cells so every expected count is large, then a
  // chi-square test against P(|X| <= a) = erf(a / sqrt(2)).
  const auto& bins = h.bins();
  double chi2 = 0.0;
  int cells = 0;
  for (std::size_t start = 0; start < bins.size(); start += 64) {
    double observed = 0.0;
    for (std::size_t b = start; b < start + 64; ++b) observed += bins[b].count;
    const double lo = bins[start].lower;
    const double hi = bins[start + 63].upper;
    const double expected =
        x.size() * (std::erf(hi / std::sqrt(2.0)) - std::erf(lo / std::sqrt(2.0)));
    if (expected < 20.0) continue;
    chi2 += (observed - expected) * (observed - expected) / expected;
    ++cells;
  }
  // Upper 0.1% point of chi-square with (cells - 1) degrees of freedom, via
  // the Wilson-Hilferty approximation.
  const double k = cells - 1;
  const double z = 3.090;
  const double crit = k * std::pow(1.0 - 2.0 / (9 * k) + z * std::sqrt(2.0 / (9 * k)), 3);
  EXPECT_LT(chi2, crit) << cells << " cells";
}

TEST(AnalyticalMseTest, Limits) {
  const std::vector<double> x = Sample(Distribution::kGaussian, 100'000, 3);
  const Histogram h = Histogram::Build(x, kDefaultHistogramBins, Signedness::kSigned);
  const double s_max = h.bins().back().upper;
  const QuantSpec spec = Signed(4);
  for (double s : {s_max, 1.5 * s_max}) {
    EXPECT_DOUBLE_EQ(AnalyticalMse(h, s, spec), spec.NoiseCoefficient() * s * s);
  }
  double second_moment = 0.0;
  for (double v : x) second_moment += v * v;
  second_moment /= x.size();
  EXPECT_NEAR(AnalyticalMse(h, 1e-9, spec) / second_moment, 1.0, 1e-3);
  EXPECT_TRUE(ThrowsError([&] { AnalyticalMse(h, 0.0, spec); }, ErrorCode::kInvalidArgument));
}

TEST(AnalyticalMseTest, TracksEmpiricalOnSmoothDistributions) {
  for (auto d : {Distribution::kGaussian, Distribution::kLaplace, Distribution::kUniform}) {
    const std::vector<double> x = Sample(d, 100'000, 17);
    for (int bits : {4, 8}) {
      const QuantSpec spec = Signed(bits);
      const MseCurve emp = SweepGroup(x, spec, {.points = 100});
      const MseCurve an = SweepGroup(x, spec, {.points = 100, .mode = CurveSource::kAnalytical});
      double worst = 0.0;
      for (std::size_t i = 19; i < emp.size(); ++i) {  // s in [0.2 s_max, s_max]
        ASSERT_EQ(emp.scalars[i], an.scalars[i]);
        worst = std::max(worst, std::fabs(an.mse[i] - emp.mse[i]) / emp.mse[i]);
      }
      EXPECT_LE(worst, 0.10) << DistributionName(d) << " B=" << bits;
    }
  }
}

TEST(AnalyticalMseTest, ConvexInScalar) {
  // Modeled regime: smooth unimodal data, B >= 4, sampled on the default
  // sweep grid. Histogram tails with a handful of counts per bin add jumps of
  // order c s^2 f(s) to the slope, which on much finer grids or at B = 2 can
  // outweigh the curvature.
  for (auto d : {Distribution::kGaussian, Distribution::kLaplace, Distribution::kUniform}) {
    const std::vector<double> x = Sample(d, 1'000'000, 23);
    const Histogram h = Histogram::Build(x, kDefaultHistogramBins, Signedness::kSigned);
    const double s_max = h.bins().back().upper;
    for (int bits : {4, 8}) {
      std::vector<double> j;
      for (std::size_t k = 1; k <= kDefaultSweepPoints; ++k) {
        j.push_back(AnalyticalMse(h, s_max * k / kDefaultSweepPoints, Signed(bits)));
      }
      for (std::size_t i = 1; i + 1 < j.size(); ++i) {
        EXPECT_GE(j[i - 1] - 2 * j[i] + j[i + 1], -1e-12 * j[i])
            << DistributionName(d) << " B=" << bits << " i=" << i;
      }
    }
  }
}

TEST(AnalyticalMseTest, UnsignedUsesOneSidedData) {
  const std::vector<double> x = Sample(Distribution::kHalfUniform, 200'000, 6);
  const Histogram h = Histogram::Build(x, kDefaultHistogramBins, Signedness::kUnsigned);
  const QuantSpec spec = Unsigned(4);
  // No clipping at s = s_max: pure discretization with the 1/12 coefficient.
  const double s_max = h.bins().back().upper;
  EXPECT_DOUBLE_EQ(AnalyticalMse(h, s_max, spec), std::pow(4.0, -4) / 12.0 * s_max * s_max);
  EXPECT_TRUE(ThrowsError([&] { AnalyticalMse(h, 1.0, Signed(4)); },
                          ErrorCode::kInvalidArgument, "signedness"));
}

TEST(SweepTest, GridAndEndpoints) {
  const std::vector<double> x = Sample(Distribution::kLaplace, 5000, 1);
  const MseCurve c = SweepGroup(x, Signed(4), {.points = 100});
  ASSERT_EQ(c.size(), 100u);
  double s_max = 0.0;
  for (double v : x) s_max = std::max(s_max, std::fabs(v));
  EXPECT_EQ(c.scalars.back(), s_max);
  for (std::size_t i = 1; i < c.size(); ++i) EXPECT_LT(c.scalars[i - 1], c.scalars[i]);
  for (double m : c.mse) EXPECT_GE(m, 0.0);
  // Last point equals the max-scaled MSE.
  EXPECT_EQ(c.mse.back(), EmpiricalMse(x, s_max, Signed(4)));
}

TEST(SweepTest, GridAlignedTensorHasZeroMseAtMax) {
  const std::vector<double> x{-1.0, -0.5, 0.0, 0.25, 0.75, 1.0};
  const MseCurve c = SweepGroup(x, Signed(3), {.points = 100});
  EXPECT_EQ(c.ArgMin(), 99u);
  EXPECT_EQ(c.mse.back(), 0.0);
}

TEST(SweepTest, ParallelMatchesSerial) {
  const std::vector<double> x = Sample(Distribution::kGaussian, 20'000, 2);
  const MseCurve a = SweepGroup(x, Signed(4), {.points = 64});
  const MseCurve b = SweepGroup(x, Signed(4), {.points = 64, .threads = 4});
  EXPECT_EQ(a.mse, b.mse);
}

TEST(SweepTest, DegenerateAndPerRow) {
  EXPECT_TRUE(ThrowsError(
      [] { SweepGroup(std::vector<double>{0, 0, 0}, Signed(4), {}); },
      ErrorCode::kDegenerate, "degenerate tensor"));
  const Tensor t = SyntheticTensor(Distribution::kGaussian, {3, 500}, 4);
  const auto curves = Sweep(t, MakeGroupView(t, Granularity::PerRow(0)), Signed(4), {});
  ASSERT_EQ(curves.size(), 3u);
  const GroupView view = MakeGroupView(t, Granularity::PerRow(0));
  const GroupedData g(t.data(), view);
  EXPECT_EQ(curves[1].mse, SweepGroup(g[1], Signed(4), {}).mse);
}

TEST(LocalMinimaTest, Shapes) {
  MseCurve convex;
  for (int i = 0; i < 21; ++i) {
    convex.scalars.push_back(i + 1);
    convex.mse.push_back((i - 7.0) * (i - 7.0));
  }
  EXPECT_EQ(LocalMinima(convex), std::vector<std::size_t>{7});
  MseCurve rising{{1, 2, 3, 4}, {1, 2, 3, 4}};
  EXPECT_EQ(LocalMinima(rising), std::vector<std::size_t>{0});
  MseCurve falling{{1, 2, 3}, {3, 2, 1}};
  EXPECT_EQ(LocalMinima(falling), std::vector<std::size_t>{2});
  MseCurve two{{1, 2, 3, 4, 5}, {2, 1, 3, 0.5, 4}};
  EXPECT_EQ(LocalMinima(two), (std::vector<std::size_t>{1, 3}));
  EXPECT_TRUE(ThrowsError([] { LocalMinima(MseCurve{{1, 2}, {1, 2}}); },
                          ErrorCode::kInvalidArgument));
}

TEST(LocalMinimaTest, RareOutliersCreateASecondMinimumNearMax) {
  // With outliers rare enough that their clipping cost is comparable to the
  // bulk's discretization noise, the curve has a bulk minimum and a second
  // one at the top of the range.
  OutlierMixture mix;
  mix.outlier_fraction = 1e-5;
  const std::vector<double> x = Sample(Distribution::kOutlierMixture, 1'000'000, 31, mix);
  const MseCurve c = SweepGroup(x, Signed(4), {.points = 1000, .threads = 4});
  const std::vector<std::size_t> minima = LocalMinima(c);
  ASSERT_GE(minima.size(), 2u);
  EXPECT_LT(c.scalars[minima.front()], 5.0);
  EXPECT_GT(c.scalars[minima.back()], 0.9 * c.scalars.back());
}

TEST(CurveCsvTest, HeaderAndRows) {
  const MseCurve c{{0.5, 1.0}, {0.25, 0.125}};
  std::ostringstream os;
  WriteCurveCsv(c, os);
  EXPECT_EQ(os.str(), "scalar,mse\n0.5,0.25\n1,0.125\n");
}

TEST(PercentileTest, Examples) {
  EXPECT_EQ(PercentileMagnitude(std::vector<double>{-2.5, 2.5, -2.5}, 37.0), 2.5);
  std::vector<double> m(1000);
  for (int i = 0; i < 1000; ++i) m[i] = i + 1;
  std::reverse(m.begin(), m.end());
  // Sorted-and-indexed oracle: rank 0.999 * 999 = 998.001 between 999 and 1000.
  EXPECT_NEAR(PercentileMagnitude(m, 99.9), 999.001, 1e-9);
  const Tensor t = SyntheticTensor(Distribution::kGaussian, {8, 100}, 12);
  const GroupView view = MakeGroupView(t, Granularity::PerRow(0));
  EXPECT_EQ(PercentileMagnitude(t, view, 100.0).scalars,
            MaxScalar(t, view, Signedness::kSigned).scalars);
  double prev = 0.0;
  for (double p : {1.0, 10.0, 50.0, 90.0, 99.0, 99.9, 100.0}) {
    const double v = PercentileMagnitude(t.data(), p);
    EXPECT_LE(prev, v);
    prev = v;
  }
  EXPECT_TRUE(ThrowsError([] { PercentileMagnitude(std::vector<double>{1}, 0.0); },
                          ErrorCode::kInvalidArgument));
}

}  // namespace
}  // namespace octav
