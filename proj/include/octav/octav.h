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
#ifndef OCTAV_OCTAV_H_
#define OCTAV_OCTAV_H_

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(OCTAV_BUILDING_LIBRARY)
#define OCTAV_API __attribute__((visibility("default")))
#else
#define OCTAV_API
#endif

typedef enum {
  OCTAV_OK = 0,
  OCTAV_INVALID_ARGUMENT = 1,
  OCTAV_IO = 2,
  OCTAV_FORMAT = 3,
  OCTAV_DEGENERATE = 4,
  OCTAV_INTERNAL = 5,
} octav_status;

typedef struct {
  int bits;             /* 2..16 */
  int is_unsigned;      /* nonzero: unsigned grid, data must be >= 0 */
  int twos_complement;  /* nonzero: drop the top positive signed level */
} octav_spec;

typedef struct {
  int per_row;  /* zero: one scalar for the whole tensor */
  size_t axis;  /* row axis when per_row is nonzero */
} octav_granularity;

typedef struct octav_tensor octav_tensor;
/* A JSON document produced by calibration or benchmarking. */
typedef struct octav_report octav_report;

/* Message of the last failed call on this thread; "" after success. */
OCTAV_API const char* octav_last_error(void);
OCTAV_API const char* octav_version(void);

OCTAV_API octav_status octav_tensor_create(const double* data, const size_t* shape, size_t rank,
                                           octav_tensor** out);
OCTAV_API octav_status octav_tensor_load(const char* path, octav_tensor** out);
/* Writes float64 unless the tensor was loaded from a float32 file. */
OCTAV_API octav_status octav_tensor_save(const octav_tensor* t, const char* path);
OCTAV_API void octav_tensor_free(octav_tensor* t);
OCTAV_API size_t octav_tensor_size(const octav_tensor* t);
OCTAV_API size_t octav_tensor_rank(const octav_tensor* t);
OCTAV_API const size_t* octav_tensor_shape(const octav_tensor* t);
OCTAV_API const double* octav_tensor_data(const octav_tensor* t);

/* Synthetic data: distribution is one of gaussian, laplace, uniform,
   half-uniform, sparse-gaussian, outlier. */
OCTAV_API octav_status octav_tensor_generate(const char* distribution, const size_t* shape,
                                             size_t rank, uint64_t seed, octav_tensor** out);

/* Shape (rank 4) of tensor `index` in a synthetic convolution-weight corpus
   of `count` tensors with at least `min_elements` elements each. */
OCTAV_API octav_status octav_corpus_shape(size_t count, size_t min_elements, size_t index,
                                          size_t shape[4]);

OCTAV_API octav_status octav_group_count(const octav_tensor* t, octav_granularity g,
                                         size_t* out);

/* One scalar per group into scalars[0..capacity). method is octav, max,
   sweep:N or percentile:P; iterations applies to octav. Degenerate
   (all-zero) groups get 0 and are counted in *degenerate when it is
   non-null. */
OCTAV_API octav_status octav_calibrate(const octav_tensor* t, octav_spec spec,
                                       octav_granularity g, const char* method, int iterations,
                                       int threads, double* scalars, size_t capacity,
                                       size_t* degenerate);

/* Fake-quantized copy of t using one scalar per group. */
OCTAV_API octav_status octav_quantize(const octav_tensor* t, octav_spec spec,
                                      octav_granularity g, const double* scalars, size_t count,
                                      octav_tensor** out);

/* Empirical MSE of quantizing t with the given scalars. */
OCTAV_API octav_status octav_mse(const octav_tensor* t, octav_spec spec, octav_granularity g,
                                 const double* scalars, size_t count, double* mse);

/* Whole-tensor MSE curve at k/points * max|x|, k = 1..points. analytical
   selects the histogram model instead of measured MSE. */
OCTAV_API octav_status octav_sweep(const octav_tensor* t, octav_spec spec, size_t points,
                                   int analytical, double* scalars, double* mse);

/* Calibrates every tensor of a dump directory; pattern is a shell glob on
   file names, or NULL for all. */
OCTAV_API octav_status octav_calibrate_dir(const char* dir, const char* pattern,
                                           octav_spec spec, octav_granularity g,
                                           const char* method, int iterations, int threads,
                                           octav_report** out);

/* Single-threaded OCTAV vs 100-point sweep timing over a directory. */
OCTAV_API octav_status octav_bench_dir(const char* dir, const char* pattern, octav_spec spec,
                                       octav_granularity g, int repetitions,
                                       octav_report** out);

OCTAV_API const char* octav_report_json(const octav_report* r);
/* Calibration: degenerate groups over all tensors. Bench: 1 when the
   corpus is flagged unrepresentative. */
OCTAV_API size_t octav_report_warnings(const octav_report* r);
OCTAV_API void octav_report_free(octav_report* r);

#ifdef __cplusplus
}  // extern "C"
#endif

#endif  // OCTAV_OCTAV_H_
