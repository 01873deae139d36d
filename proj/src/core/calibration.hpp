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
#ifndef OCTAV_CORE_CALIBRATION_HPP_
#define OCTAV_CORE_CALIBRATION_HPP_

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "core/quantizer.hpp"
#include "core/tensor.hpp"

namespace octav {

inline constexpr int kReportSchemaVersion = 1;

// Scalar-selection method.
//   octav          OCTAV with the configured iteration count
//   sweep:N        argmin of the N-point empirical sweep
//   percentile:P   P-th percentile of |x|
//   max            max |x|
struct Method {
  enum class Kind { kOctav, kSweep, kPercentile, kMax };

  Kind kind = Kind::kOctav;
  std::size_t points = 100;
  double percentile = 99.99;

  // Throws Error(kInvalidArgument) on an unknown or malformed string.
  static Method Parse(const std::string& text);
  std::string ToString() const;
};

// "tensor" or "row:AXIS".
Granularity ParseGranularity(const std::string& text);
std::string GranularityName(const Granularity& g);

struct CalibrationOptions {
  Method method;
  QuantSpec spec;
  Granularity granularity;
  int iterations = 10;  // OCTAV only
  int threads = 1;
};

// Candidate scalars for one tensor. Groups whose data is all zero get 0 and
// are flagged degenerate.
ScalarSet CalibrateTensor(const Tensor& t, const CalibrationOptions& options);

struct TensorReport {
  std::string name;
  std::vector<std::size_t> shape;
  std::string granularity;
  std::string method;
  std::vector<double> scalars;  // per group, averaged over batches
  std::size_t degenerate_groups = 0;
  double mse = 0.0;             // empirical MSE over the union of batches
  std::size_t batches = 0;
  double seconds = 0.0;         // candidate computation over all batches
};

struct CalibrationReport {
  int bits = 0;
  std::string signedness;
  std::string boundary;
  std::vector<TensorReport> tensors;

  std::size_t degenerate_groups() const;
  std::string ToJson() const;
};

// Per group, the candidate of every batch in which the group is not all
// zero is averaged; the MSE is measured with the averaged scalars over all
// batches together. Throws when batch shapes differ.
TensorReport CalibrateBatches(const std::string& name, const std::vector<Tensor>& batches,
                              const CalibrationOptions& options);

// A tensor dump directory: files "<name>.batch<k>.octv" are batches of
// tensor <name>; any other "<name>.octv" is a single-batch tensor.
struct TensorFiles {
  std::string name;
  std::vector<std::filesystem::path> batches;  // ordered by k
};

// Groups the *.octv files of `dir` whose file name matches the shell glob
// `pattern` (every file when empty). Sorted by tensor name.
std::vector<TensorFiles> ScanTensorDir(const std::filesystem::path& dir,
                                       const std::string& pattern = "");

CalibrationReport CalibrateDir(const std::filesystem::path& dir,
                               const CalibrationOptions& options,
                               const std::string& pattern = "");

struct BenchTiming {
  std::string method;
  double per_tensor_mean_seconds = 0.0;
  double total_seconds = 0.0;    // mean over repetitions
  double total_variance = 0.0;   // sample variance over repetitions
  std::size_t tensor_count = 0;
};

struct BenchReport {
  BenchTiming octav;
  BenchTiming sweep;
  double speedup = 0.0;  // sweep.total_seconds / octav.total_seconds
  int repetitions = 0;
  std::size_t min_elements = 0;
  bool unrepresentative = false;
  std::vector<std::string> warnings;

  std::string ToJson() const;
};

inline constexpr std::size_t kBenchMinTensors = 10;
inline constexpr std::size_t kBenchMinElements = 100'000;

// Single-threaded wall time of OCTAV (10 iterations) and of the 100-point
// empirical sweep per tensor. The timer brackets only the scalar search.
BenchReport Bench(const std::vector<Tensor>& tensors, const QuantSpec& spec,
                  const Granularity& granularity, int repetitions);

// Seconds taken by one OCTAV calibration of `t`.
double TimeOctav(const Tensor& t, const QuantSpec& spec, const Granularity& granularity);

}  // namespace octav

#endif  // OCTAV_CORE_CALIBRATION_HPP_
