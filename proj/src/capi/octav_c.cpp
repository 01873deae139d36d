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
#include "octav/octav.h"

#include <algorithm>
#include <exception>
#include <new>
#include <string>
#include <utility>
#include <vector>

#include "core/calibration.hpp"
#include "core/error.hpp"
#include "core/noise.hpp"
#include "core/quantizer.hpp"
#include "core/synthetic.hpp"
#include "core/tensor.hpp"

struct octav_tensor {
  octav::Tensor tensor;
};

struct octav_report {
  std::string json;
  size_t warnings = 0;
};

namespace {

thread_local std::string last_error;

octav_status Record(octav_status status, std::string message) {
  last_error = std::move(message);
  return status;
}

// Runs fn, translating exceptions into status codes.
template <typename F>
octav_status Guard(F&& fn) {
  try {
    fn();
    last_error.clear();
    return OCTAV_OK;
  } catch (const octav::Error& e) {
    return Record(static_cast<octav_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return Record(OCTAV_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return Record(OCTAV_INTERNAL, e.what());
  }
}

void NotNull(const void* p, const char* what) {
  octav::Require(p != nullptr, std::string(what) + " is null");
}

octav::QuantSpec ToSpec(octav_spec s) {
  octav::QuantSpec spec;
  spec.bits = s.bits;
  spec.signedness = s.is_unsigned ? octav::Signedness::kUnsigned : octav::Signedness::kSigned;
  spec.boundary = s.twos_complement ? octav::BoundaryMode::kTwosComplement
                                    : octav::BoundaryMode::kMathematical;
  spec.Validate();
  return spec;
}

octav::Granularity ToGranularity(octav_granularity g) {
  return g.per_row ? octav::Granularity::PerRow(g.axis) : octav::Granularity::PerTensor();
}

std::vector<size_t> ToShape(const size_t* shape, size_t rank) {
  octav::Require(rank > 0, "rank must be positive");
  NotNull(shape, "shape");
  return {shape, shape + rank};
}

octav::ScalarSet ToScalars(const octav::Tensor& t, octav_granularity g, const double* scalars,
                           size_t count) {
  octav::ScalarSet set;
  set.view = octav::MakeGroupView(t, ToGranularity(g));
  octav::Require(count == set.view.group_count(),
                 "scalar count " + std::to_string(count) + " does not match group count " +
                     std::to_string(set.view.group_count()));
  NotNull(scalars, "scalars");
  set.scalars.assign(scalars, scalars + count);
  for (const double s : set.scalars) set.degenerate.push_back(s == 0.0);
  return set;
}

}  // namespace

extern "C" {

const char* octav_last_error(void) { return last_error.c_str(); }

const char* octav_version(void) { return "1.0.0"; }

octav_status octav_tensor_create(const double* data, const size_t* shape, size_t rank,
                                 octav_tensor** out) {
  return Guard([&] {
    NotNull(out, "out");
    std::vector<size_t> dims = ToShape(shape, rank);
    size_t n = 1;
    for (const size_t d : dims) n *= d;
    if (n > 0) NotNull(data, "data");
    std::vector<double> values(data, data + n);
    *out = new octav_tensor{octav::Tensor(std::move(values), std::move(dims))};
  });
}

octav_status octav_tensor_load(const char* path, octav_tensor** out) {
  return Guard([&] {
    NotNull(path, "path");
    NotNull(out, "out");
    *out = new octav_tensor{octav::LoadTensor(path)};
  });
}

octav_status octav_tensor_save(const octav_tensor* t, const char* path) {
  return Guard([&] {
    NotNull(t, "tensor");
    NotNull(path, "path");
    octav::SaveTensor(t->tensor, path);
  });
}

void octav_tensor_free(octav_tensor* t) { delete t; }

size_t octav_tensor_size(const octav_tensor* t) { return t ? t->tensor.size() : 0; }

size_t octav_tensor_rank(const octav_tensor* t) { return t ? t->tensor.rank() : 0; }

const size_t* octav_tensor_shape(const octav_tensor* t) {
  return t ? t->tensor.shape().data() : nullptr;
}

const double* octav_tensor_data(const octav_tensor* t) {
  return t ? t->tensor.data().data() : nullptr;
}

octav_status octav_tensor_generate(const char* distribution, const size_t* shape, size_t rank,
                                   uint64_t seed, octav_tensor** out) {
  return Guard([&] {
    NotNull(distribution, "distribution");
    NotNull(out, "out");
    const octav::Distribution d = octav::ParseDistribution(distribution);
    *out = new octav_tensor{octav::SyntheticTensor(d, ToShape(shape, rank), seed)};
  });
}

octav_status octav_corpus_shape(size_t count, size_t min_elements, size_t index,
                                size_t shape[4]) {
  return Guard([&] {
    NotNull(shape, "shape");
    octav::Require(index < count, "corpus index out of range");
    const auto shapes = octav::WeightCorpusShapes(count, min_elements);
    std::copy(shapes[index].begin(), shapes[index].end(), shape);
  });
}

octav_status octav_group_count(const octav_tensor* t, octav_granularity g, size_t* out) {
  return Guard([&] {
    NotNull(t, "tensor");
    NotNull(out, "out");
    *out = octav::MakeGroupView(t->tensor, ToGranularity(g)).group_count();
  });
}

octav_status octav_calibrate(const octav_tensor* t, octav_spec spec, octav_granularity g,
                             const char* method, int iterations, int threads, double* scalars,
                             size_t capacity, size_t* degenerate) {
  return Guard([&] {
    NotNull(t, "tensor");
    NotNull(method, "method");
    octav::CalibrationOptions options;
    options.method = octav::Method::Parse(method);
    options.spec = ToSpec(spec);
    options.granularity = ToGranularity(g);
    options.iterations = iterations;
    options.threads = threads;
    const octav::ScalarSet set = octav::CalibrateTensor(t->tensor, options);
    octav::Require(capacity >= set.size(), "scalar buffer holds " + std::to_string(capacity) +
                                               " values, " + std::to_string(set.size()) +
                                               " needed");
    NotNull(scalars, "scalars");
    std::copy(set.scalars.begin(), set.scalars.end(), scalars);
    if (degenerate) {
      *degenerate = static_cast<size_t>(
          std::count(set.degenerate.begin(), set.degenerate.end(), true));
    }
  });
}

octav_status octav_quantize(const octav_tensor* t, octav_spec spec, octav_granularity g,
                            const double* scalars, size_t count, octav_tensor** out) {
  return Guard([&] {
    NotNull(t, "tensor");
    NotNull(out, "out");
    const octav::ScalarSet set = ToScalars(t->tensor, g, scalars, count);
    octav::Tensor q = octav::QuantizeClipped(t->tensor, set, ToSpec(spec));
    *out = new octav_tensor{q.WithStorage(octav::StorageDtype::kFloat64)};
  });
}

octav_status octav_mse(const octav_tensor* t, octav_spec spec, octav_granularity g,
                       const double* scalars, size_t count, double* mse) {
  return Guard([&] {
    NotNull(t, "tensor");
    NotNull(mse, "mse");
    const octav::ScalarSet set = ToScalars(t->tensor, g, scalars, count);
    *mse = octav::OverallMse(set, octav::EmpiricalMse(t->tensor, set, ToSpec(spec)));
  });
}

octav_status octav_sweep(const octav_tensor* t, octav_spec spec, size_t points, int analytical,
                         double* scalars, double* mse) {
  return Guard([&] {
    NotNull(t, "tensor");
    NotNull(scalars, "scalars");
    NotNull(mse, "mse");
    octav::SweepOptions options;
    options.points = points;
    options.mode = analytical ? octav::CurveSource::kAnalytical : octav::CurveSource::kEmpirical;
    const octav::MseCurve curve = octav::SweepGroup(t->tensor.data(), ToSpec(spec), options);
    std::copy(curve.scalars.begin(), curve.scalars.end(), scalars);
    std::copy(curve.mse.begin(), curve.mse.end(), mse);
  });
}

octav_status octav_calibrate_dir(const char* dir, const char* pattern, octav_spec spec,
                                 octav_granularity g, const char* method, int iterations,
                                 int threads, octav_report** out) {
  return Guard([&] {
    NotNull(dir, "dir");
    NotNull(method, "method");
    NotNull(out, "out");
    octav::CalibrationOptions options;
    options.method = octav::Method::Parse(method);
    options.spec = ToSpec(spec);
    options.granularity = ToGranularity(g);
    options.iterations = iterations;
    options.threads = threads;
    const octav::CalibrationReport report =
        octav::CalibrateDir(dir, options, pattern ? pattern : "");
    *out = new octav_report{report.ToJson(), report.degenerate_groups()};
  });
}

octav_status octav_bench_dir(const char* dir, const char* pattern, octav_spec spec,
                             octav_granularity g, int repetitions, octav_report** out) {
  return Guard([&] {
    NotNull(dir, "dir");
    NotNull(out, "out");
    std::vector<octav::Tensor> tensors;
    for (const auto& tf : octav::ScanTensorDir(dir, pattern ? pattern : "")) {
      for (const auto& path : tf.batches) tensors.push_back(octav::LoadTensor(path));
    }
    const octav::BenchReport report =
        octav::Bench(tensors, ToSpec(spec), ToGranularity(g), repetitions);
    *out = new octav_report{report.ToJson(), report.unrepresentative ? 1u : 0u};
  });
}

const char* octav_report_json(const octav_report* r) { return r ? r->json.c_str() : ""; }

size_t octav_report_warnings(const octav_report* r) { return r ? r->warnings : 0; }

void octav_report_free(octav_report* r) { delete r; }

}  // extern "C"
