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
#include "core/calibration.hpp"

#include <fnmatch.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>
#include <regex>
#include <sstream>

#include "core/error.hpp"
#include "core/noise.hpp"
#include "core/solver.hpp"
#include "json.hpp"

namespace octav {
namespace {

using Clock = std::chrono::steady_clock;

double Seconds(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Parses the whole of `text` as a number, or fails with `what`.
template <typename T>
T ParseNumber(const std::string& text, const std::string& what) {
  T value{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty()) {
    Fail(ErrorCode::kInvalidArgument, what);
  }
  return value;
}

double GroupMaxMagnitude(std::span<const double> group) {
  double m = 0.0;
  for (const double x : group) m = std::max(m, std::fabs(x));
  return m;
}

double SweepArgMin(std::span<const double> group, const QuantSpec& spec, std::size_t points) {
  SweepOptions options;
  options.points = points;
  const MseCurve curve = SweepGroup(group, spec, options);
  return curve.scalars[curve.ArgMin()];
}

}  // namespace

Method Method::Parse(const std::string& text) {
  const auto colon = text.find(':');
  const std::string head = text.substr(0, colon);
  const bool has_arg = colon != std::string::npos;
  const std::string arg = has_arg ? text.substr(colon + 1) : "";
  Method m;
  if (head == "octav" && !has_arg) {
    m.kind = Kind::kOctav;
  } else if (head == "max" && !has_arg) {
    m.kind = Kind::kMax;
  } else if (head == "sweep" && has_arg) {
    m.kind = Kind::kSweep;
    m.points = ParseNumber<std::size_t>(arg, "bad sweep point count '" + arg + "'");
    Require(m.points >= 2, "sweep needs at least 2 points");
  } else if (head == "percentile" && has_arg) {
    m.kind = Kind::kPercentile;
    m.percentile = ParseNumber<double>(arg, "bad percentile '" + arg + "'");
    Require(m.percentile > 0.0 && m.percentile <= 100.0, "percentile must be in (0, 100]");
  } else {
    Fail(ErrorCode::kInvalidArgument, "unknown method '" + text + "'");
  }
  return m;
}

std::string Method::ToString() const {
  switch (kind) {
    case Kind::kOctav:
      return "octav";
    case Kind::kMax:
      return "max";
    case Kind::kSweep:
      return "sweep:" + std::to_string(points);
    case Kind::kPercentile: {
      std::ostringstream os;
      os << "percentile:" << percentile;
      return os.str();
    }
  }
  return "";
}

Granularity ParseGranularity(const std::string& text) {
  if (text == "tensor") return Granularity::PerTensor();
  if (text.rfind("row:", 0) == 0) {
    return Granularity::PerRow(
        ParseNumber<std::size_t>(text.substr(4), "bad row axis in '" + text + "'"));
  }
  Fail(ErrorCode::kInvalidArgument, "unknown granularity '" + text + "'");
}

std::string GranularityName(const Granularity& g) {
  return g.kind == Granularity::Kind::kPerTensor ? "tensor" : "row:" + std::to_string(g.axis);
}

ScalarSet CalibrateTensor(const Tensor& t, const CalibrationOptions& options) {
  options.spec.Validate();
  const GroupView view = MakeGroupView(t, options.granularity);
  CheckSignedness(t.data(), options.spec.signedness);
  if (options.method.kind == Method::Kind::kOctav) {
    OctavConfig cfg;
    cfg.iterations = options.iterations;
    cfg.threads = options.threads;
    return Octav(t, view, options.spec, cfg).scalars;
  }
  const GroupedData groups(t.data(), view);
  ScalarSet out;
  out.view = view;
  out.scalars.resize(groups.size());
  out.degenerate.resize(groups.size());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (GroupMaxMagnitude(groups[g]) == 0.0) {
      out.degenerate[g] = true;
      continue;
    }
    switch (options.method.kind) {
      case Method::Kind::kMax:
        out.scalars[g] = GroupMaxMagnitude(groups[g]);
        break;
      case Method::Kind::kPercentile:
        out.scalars[g] = PercentileMagnitude(groups[g], options.method.percentile);
        break;
      case Method::Kind::kSweep:
        out.scalars[g] = SweepArgMin(groups[g], options.spec, options.method.points);
        break;
      case Method::Kind::kOctav:
        break;
    }
  }
  return out;
}

std::size_t CalibrationReport::degenerate_groups() const {
  std::size_t n = 0;
  for (const auto& t : tensors) n += t.degenerate_groups;
  return n;
}

std::string CalibrationReport::ToJson() const {
  nlohmann::json list = nlohmann::json::array();
  for (const TensorReport& t : tensors) {
    list.push_back({{"name", t.name},
                    {"shape", t.shape},
                    {"granularity", t.granularity},
                    {"method", t.method},
                    {"scalars", t.scalars},
                    {"degenerate_groups", t.degenerate_groups},
                    {"mse", t.mse},
                    {"batches", t.batches},
                    {"seconds", t.seconds}});
  }
  const nlohmann::json j{{"schema_version", kReportSchemaVersion},
                         {"bits", bits},
                         {"signedness", signedness},
                         {"boundary", boundary},
                         {"tensors", std::move(list)}};
  return j.dump(2);
}

TensorReport CalibrateBatches(const std::string& name, const std::vector<Tensor>& batches,
                              const CalibrationOptions& options) {
  Require(!batches.empty(), "no batches for tensor '" + name + "'");
  for (const Tensor& b : batches) {
    Require(b.shape() == batches.front().shape(),
            "inconsistent shapes across batches for '" + name + "'");
  }
  const auto start = Clock::now();
  std::vector<ScalarSet> candidates;
  candidates.reserve(batches.size());
  for (const Tensor& b : batches) candidates.push_back(CalibrateTensor(b, options));
  const double seconds = Seconds(start);

  const std::size_t groups = candidates.front().size();
  ScalarSet averaged;
  averaged.view = candidates.front().view;
  averaged.scalars.assign(groups, 0.0);
  averaged.degenerate.assign(groups, true);
  for (std::size_t g = 0; g < groups; ++g) {
    double sum = 0.0;
    std::size_t used = 0;
    for (const ScalarSet& c : candidates) {
      if (c.degenerate[g]) continue;
      sum += c.scalars[g];
      ++used;
    }
    if (used > 0) {
      averaged.scalars[g] = sum / static_cast<double>(used);
      averaged.degenerate[g] = false;
    }
  }

  // Every batch has the same group sizes, so the union MSE is the mean of
  // the per-batch overall MSEs.
  double mse = 0.0;
  for (const Tensor& b : batches) {
    mse += OverallMse(averaged, EmpiricalMse(b, averaged, options.spec));
  }
  TensorReport report;
  report.name = name;
  report.shape = batches.front().shape();
  report.granularity = GranularityName(options.granularity);
  report.method = options.method.ToString();
  report.scalars = averaged.scalars;
  report.degenerate_groups = static_cast<std::size_t>(
      std::count(averaged.degenerate.begin(), averaged.degenerate.end(), true));
  report.mse = mse / static_cast<double>(batches.size());
  report.batches = batches.size();
  report.seconds = seconds;
  return report;
}

std::vector<TensorFiles> ScanTensorDir(const std::filesystem::path& dir,
                                       const std::string& pattern) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) {
    Fail(ErrorCode::kIo, "cannot read directory " + dir.string());
  }
  static const std::regex kBatch(R"((.+)\.batch(\d+)\.octv)");
  std::map<std::string, std::map<std::uint64_t, std::filesystem::path>> found;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string file = entry.path().filename().string();
    if (entry.path().extension() != ".octv") continue;
    if (!pattern.empty() && fnmatch(pattern.c_str(), file.c_str(), 0) != 0) continue;
    std::smatch m;
    if (std::regex_match(file, m, kBatch)) {
      const std::uint64_t k = std::stoull(m[2].str());
      auto& slot = found[m[1].str()];
      Require(!slot.contains(k), "duplicate batch index in " + file);
      slot[k] = entry.path();
    } else {
      found[entry.path().stem().string()][0] = entry.path();
    }
  }
  std::vector<TensorFiles> out;
  for (auto& [name, by_index] : found) {
    TensorFiles tf{name, {}};
    for (auto& [k, path] : by_index) tf.batches.push_back(path);
    out.push_back(std::move(tf));
  }
  if (out.empty()) Fail(ErrorCode::kIo, "no .octv files in " + dir.string());
  return out;
}

CalibrationReport CalibrateDir(const std::filesystem::path& dir,
                               const CalibrationOptions& options, const std::string& pattern) {
  CalibrationReport report;
  report.bits = options.spec.bits;
  report.signedness = options.spec.is_signed() ? "signed" : "unsigned";
  report.boundary =
      options.spec.boundary == BoundaryMode::kMathematical ? "math" : "twos";
  for (const TensorFiles& tf : ScanTensorDir(dir, pattern)) {
    std::vector<Tensor> batches;
    for (const auto& path : tf.batches) batches.push_back(LoadTensor(path));
    report.tensors.push_back(CalibrateBatches(tf.name, batches, options));
  }
  return report;
}

std::string BenchReport::ToJson() const {
  auto timing = [](const BenchTiming& t) {
    return nlohmann::json{{"method", t.method},
                          {"per_tensor_mean_seconds", t.per_tensor_mean_seconds},
                          {"total_seconds", t.total_seconds},
                          {"total_variance", t.total_variance},
                          {"tensor_count", t.tensor_count}};
  };
  const nlohmann::json j{{"schema_version", kReportSchemaVersion},
                         {"octav", timing(octav)},
                         {"sweep", timing(sweep)},
                         {"speedup", speedup},
                         {"repetitions", repetitions},
                         {"min_elements", min_elements},
                         {"unrepresentative", unrepresentative},
                         {"warnings", warnings}};
  return j.dump(2);
}

double TimeOctav(const Tensor& t, const QuantSpec& spec, const Granularity& granularity) {
  const GroupView view = MakeGroupView(t, granularity);
  OctavConfig cfg;
  cfg.iterations = kDefaultOctavIterations;
  cfg.threads = 1;
  const auto start = Clock::now();
  const OctavResult result = Octav(t, view, spec, cfg);
  const double seconds = Seconds(start);
  Require(result.scalars.size() == view.group_count(), "octav returned a short scalar set");
  return seconds;
}

namespace {

double TimeSweep(const Tensor& t, const QuantSpec& spec, const Granularity& granularity) {
  const GroupView view = MakeGroupView(t, granularity);
  const GroupedData groups(t.data(), view);
  std::vector<double> scalars(groups.size());
  const auto start = Clock::now();
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (GroupMaxMagnitude(groups[g]) == 0.0) continue;
    scalars[g] = SweepArgMin(groups[g], spec, kDefaultSweepPoints);
  }
  const double seconds = Seconds(start);
  Require(std::all_of(scalars.begin(), scalars.end(), [](double s) { return s >= 0.0; }),
          "sweep produced a negative scalar");
  return seconds;
}

BenchTiming Summarize(const std::string& method, const std::vector<double>& totals,
                      std::size_t tensors) {
  BenchTiming t;
  t.method = method;
  t.tensor_count = tensors;
  const double n = static_cast<double>(totals.size());
  t.total_seconds = std::accumulate(totals.begin(), totals.end(), 0.0) / n;
  if (totals.size() > 1) {
    double ss = 0.0;
    for (const double x : totals) ss += (x - t.total_seconds) * (x - t.total_seconds);
    t.total_variance = ss / (n - 1.0);
  }
  t.per_tensor_mean_seconds = t.total_seconds / static_cast<double>(tensors);
  return t;
}

}  // namespace

BenchReport Bench(const std::vector<Tensor>& tensors, const QuantSpec& spec,
                  const Granularity& granularity, int repetitions) {
  spec.Validate();
  Require(!tensors.empty(), "no tensors to benchmark");
  Require(repetitions >= 1, "repetitions must be at least 1");
  BenchReport report;
  report.repetitions = repetitions;
  report.min_elements = tensors.front().size();
  for (const Tensor& t : tensors) {
    CheckSignedness(t.data(), spec.signedness);
    report.min_elements = std::min(report.min_elements, t.size());
  }
  if (tensors.size() < kBenchMinTensors) {
    report.warnings.push_back("only " + std::to_string(tensors.size()) + " tensors; at least " +
                              std::to_string(kBenchMinTensors) + " are needed");
  }
  if (report.min_elements < kBenchMinElements) {
    report.warnings.push_back("smallest tensor has " + std::to_string(report.min_elements) +
                              " elements; at least " + std::to_string(kBenchMinElements) +
                              " are needed");
  }
  report.unrepresentative = !report.warnings.empty();

  std::vector<double> octav_totals;
  std::vector<double> sweep_totals;
  for (int r = 0; r < repetitions; ++r) {
    double octav_total = 0.0;
    double sweep_total = 0.0;
    for (const Tensor& t : tensors) {
      octav_total += TimeOctav(t, spec, granularity);
      sweep_total += TimeSweep(t, spec, granularity);
    }
    octav_totals.push_back(octav_total);
    sweep_totals.push_back(sweep_total);
  }
  report.octav = Summarize("octav", octav_totals, tensors.size());
  report.sweep = Summarize("sweep:" + std::to_string(kDefaultSweepPoints), sweep_totals,
                           tensors.size());
  report.speedup = report.sweep.total_seconds / report.octav.total_seconds;
  return report;
}

}  // namespace octav
