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
#include "core/noise.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <string>
#include <thread>

#include "core/error.hpp"
#include "core/reduce.hpp"

namespace octav {
namespace {

double Magnitude(double x, Signedness signedness) {
  return signedness == Signedness::kSigned ? std::fabs(x) : x;
}

double MaxMagnitude(std::span<const double> group) {
  double m = 0.0;
  for (const double x : group) m = std::max(m, std::fabs(x));
  return m;
}

// Runs fn(i) for i in [0, n) on up to `threads` workers. Each index is
// handled by exactly one worker, so results match the serial loop.
template <typename F>
void ParallelFor(std::size_t n, int threads, const F& fn) {
  const std::size_t workers =
      std::min<std::size_t>(n, static_cast<std::size_t>(std::max(threads, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace

std::size_t MseCurve::ArgMin() const {
  Require(!mse.empty(), "empty curve");
  return static_cast<std::size_t>(std::min_element(mse.begin(), mse.end()) -
                                  mse.begin());
}

std::vector<std::size_t> LocalMinima(const MseCurve& curve) {
  const auto& y = curve.mse;
  Require(y.size() >= 3, "local_minima needs at least 3 points");
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const bool left = (i == 0) || y[i] < y[i - 1];
    const bool right = (i + 1 == y.size()) || y[i] <= y[i + 1];
    if (left && right) out.push_back(i);
  }
  return out;
}

void WriteCurveCsv(const MseCurve& curve, std::ostream& os) {
  os << "scalar,mse\n" << std::setprecision(17);
  for (std::size_t i = 0; i < curve.size(); ++i) {
    os << curve.scalars[i] << ',' << curve.mse[i] << '\n';
  }
}

Histogram Histogram::Build(std::span<const double> values, std::size_t bins,
                           Signedness signedness) {
  Require(bins >= 2, "histogram needs at least 2 bins");
  CheckSignedness(values, signedness);
  double top = 0.0;
  for (const double x : values) top = std::max(top, Magnitude(x, signedness));
  if (top == 0.0) Fail(ErrorCode::kDegenerate, "all-zero tensor");

  Histogram h;
  h.signedness_ = signedness;
  h.bins_.resize(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    h.bins_[b].lower = top * (static_cast<double>(b) / bins);
    h.bins_[b].upper = top * (static_cast<double>(b + 1) / bins);
    h.bins_[b].count = 0;
  }
  const double scale = static_cast<double>(bins) / top;
  for (const double x : values) {
    const double m = Magnitude(x, signedness);
    if (m == 0.0) continue;
    const auto b = std::min(static_cast<std::size_t>(m * scale), bins - 1);
    ++h.bins_[b].count;
    ++h.total_;
  }
  return h;
}

Histogram Histogram::Exact(std::span<const double> values, Signedness signedness) {
  CheckSignedness(values, signedness);
  std::vector<double> m;
  m.reserve(values.size());
  for (const double x : values) {
    const double v = Magnitude(x, signedness);
    if (v != 0.0) m.push_back(v);
  }
  if (m.empty()) Fail(ErrorCode::kDegenerate, "all-zero tensor");
  std::sort(m.begin(), m.end());

  Histogram h;
  h.signedness_ = signedness;
  for (const double v : m) {
    if (!h.bins_.empty() && h.bins_.back().lower == v) {
      ++h.bins_.back().count;
    } else {
      h.bins_.push_back({v, v, 1});
    }
  }
  h.total_ = m.size();
  return h;
}

std::vector<std::uint64_t> Histogram::counts() const {
  std::vector<std::uint64_t> out;
  out.reserve(bins_.size());
  for (const auto& b : bins_) out.push_back(b.count);
  return out;
}

Histogram::Split Histogram::SplitAt(double s) const {
  Split acc;
  for (const auto& bin : bins_) {
    if (bin.count == 0) continue;
    const double n = static_cast<double>(bin.count);
    const double width = bin.upper - bin.lower;
    if (width == 0.0) {
      if (bin.lower <= s) {
        acc.in_mass += n;
      } else {
        acc.out_mass += n;
        acc.out_first += n * bin.lower;
        acc.out_cost += n * (bin.lower - s) * (bin.lower - s);
      }
    } else if (bin.upper <= s) {
      acc.in_mass += n;
    } else if (bin.lower >= s) {
      const double a = bin.lower - s;
      const double b = bin.upper - s;
      acc.out_mass += n;
      acc.out_first += n * 0.5 * (bin.lower + bin.upper);
      acc.out_cost += n * (b * b * b - a * a * a) / (3.0 * width);
    } else {
      // Straddling bin: mass split linearly at s.
      const double density = n / width;
      const double b = bin.upper - s;
      acc.in_mass += density * (s - bin.lower);
      acc.out_mass += density * b;
      acc.out_first += density * 0.5 * (bin.upper * bin.upper - s * s);
      acc.out_cost += density * b * b * b / 3.0;
    }
  }
  const double total = static_cast<double>(total_);
  acc.in_mass /= total;
  acc.out_mass /= total;
  acc.out_first /= total;
  acc.out_cost /= total;
  return acc;
}

double EmpiricalMse(std::span<const double> group, double s, const QuantSpec& spec) {
  Require(!group.empty(), "empty group");
  if (s == 0.0) {
    for (const double x : group) {
      Require(x == 0.0, "non-positive scalar for a group with nonzero values");
    }
    return 0.0;
  }
  Require(s > 0.0 && std::isfinite(s), "non-positive scalar");
  const GridQuantizer q(s, spec);
  // Leaves fold into independent lanes so the loop vectorizes; the lane
  // order is fixed, so the result stays deterministic.
  const double sse = PairwiseReduce<double>(0, group.size(), [&](std::size_t b, std::size_t e) {
    constexpr std::size_t kLanes = 8;
    double lanes[kLanes] = {};
    std::size_t i = b;
    for (; i + kLanes <= e; i += kLanes) {
      for (std::size_t k = 0; k < kLanes; ++k) {
        const double d = q(group[i + k]) - group[i + k];
        lanes[k] += d * d;
      }
    }
    double acc = 0.0;
    for (; i < e; ++i) {
      const double d = q(group[i]) - group[i];
      acc += d * d;
    }
    for (const double l : lanes) acc += l;
    return acc;
  });
  return sse / static_cast<double>(group.size());
}

std::vector<double> EmpiricalMse(const Tensor& t, const ScalarSet& scalars,
                                 const QuantSpec& spec) {
  spec.Validate();
  const GroupView view = MakeGroupView(t, scalars.view.granularity());
  Require(view.group_count() == scalars.size(),
          "scalar set was built for a different shape");
  CheckSignedness(t.data(), spec.signedness);
  const GroupedData groups(t.data(), view);
  std::vector<double> out(groups.size());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    out[g] = EmpiricalMse(groups[g], scalars.scalars[g], spec);
  }
  return out;
}

double OverallMse(const ScalarSet& scalars, std::span<const double> per_group) {
  Require(per_group.size() == scalars.size(), "group count mismatch");
  // Groups of a view all have the same size, so the weighted mean is the
  // plain mean.
  return ReduceSum(per_group) / static_cast<double>(per_group.size());
}

double AnalyticalMse(const Histogram& h, double s, const QuantSpec& spec) {
  Require(s > 0.0 && std::isfinite(s), "analytical_mse needs s > 0");
  Require(h.signedness() == spec.signedness,
          "histogram and spec disagree on signedness");
  const Histogram::Split split = h.SplitAt(s);
  return spec.NoiseCoefficient() * s * s * split.in_mass + split.out_cost;
}

MseCurve SweepGroup(std::span<const double> group, const QuantSpec& spec,
                    const SweepOptions& options) {
  spec.Validate();
  Require(options.points >= 2, "sweep needs at least 2 points");
  CheckSignedness(group, spec.signedness);
  const double s_max = MaxMagnitude(group);
  if (s_max == 0.0) Fail(ErrorCode::kDegenerate, "degenerate tensor");

  MseCurve curve;
  curve.source = options.mode;
  curve.scalars.resize(options.points);
  curve.mse.resize(options.points);
  for (std::size_t k = 1; k <= options.points; ++k) {
    curve.scalars[k - 1] = s_max * (static_cast<double>(k) / options.points);
  }
  if (options.mode == CurveSource::kEmpirical) {
    ParallelFor(options.points, options.threads, [&](std::size_t i) {
      curve.mse[i] = EmpiricalMse(group, curve.scalars[i], spec);
    });
  } else {
    const Histogram h = Histogram::Build(group, options.histogram_bins, spec.signedness);
    ParallelFor(options.points, options.threads, [&](std::size_t i) {
      curve.mse[i] = AnalyticalMse(h, curve.scalars[i], spec);
    });
  }
  return curve;
}

std::vector<MseCurve> Sweep(const Tensor& t, const GroupView& view,
                            const QuantSpec& spec, const SweepOptions& options) {
  const GroupedData groups(t.data(), view);
  std::vector<MseCurve> curves;
  curves.reserve(groups.size());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    try {
      curves.push_back(SweepGroup(groups[g], spec, options));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kDegenerate || groups.size() == 1) throw;
      Fail(ErrorCode::kDegenerate, "degenerate group " + std::to_string(g));
    }
  }
  return curves;
}

double PercentileMagnitude(std::span<const double> group, double p) {
  Require(!group.empty(), "empty group");
  Require(p > 0.0 && p <= 100.0, "percentile must be in (0, 100]");
  std::vector<double> m(group.size());
  std::transform(group.begin(), group.end(), m.begin(),
                 [](double x) { return std::fabs(x); });
  std::sort(m.begin(), m.end());
  const double rank = p / 100.0 * static_cast<double>(m.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  if (lo + 1 >= m.size()) return m.back();
  const double frac = rank - static_cast<double>(lo);
  return m[lo] + frac * (m[lo + 1] - m[lo]);
}

ScalarSet PercentileMagnitude(const Tensor& t, const GroupView& view, double p) {
  const GroupedData groups(t.data(), view);
  ScalarSet out;
  out.view = view;
  out.scalars.resize(groups.size());
  out.degenerate.resize(groups.size());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    out.scalars[g] = PercentileMagnitude(groups[g], p);
    out.degenerate[g] = out.scalars[g] == 0.0;
  }
  return out;
}

}  // namespace octav
