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
#ifndef OCTAV_CORE_SYNTHETIC_HPP_
#define OCTAV_CORE_SYNTHETIC_HPP_

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "core/tensor.hpp"

namespace octav {

// Seeded test-data generators. Output depends only on (kind, n, seed).
enum class Distribution {
  kGaussian,        // N(0, 1)
  kLaplace,         // Laplace(0, 1)
  kUniform,         // U(-1, 1)
  kHalfUniform,     // U(0, 1)
  kSparseGaussian,  // N(0, 1) with each element zeroed with probability 1/2
  kOutlierMixture,  // bulk in [-1, 1] plus rare outliers near +-350
};

// Parses "gaussian", "laplace", "uniform", "half-uniform",
// "sparse-gaussian", "outlier".
Distribution ParseDistribution(std::string_view name);
std::string DistributionName(Distribution d);

struct OutlierMixture {
  double outlier_fraction = 1e-3;
  double outlier_center = 350.0;
  double outlier_spread = 5.0;
  double bulk_sigma = 1.0 / 3.0;  // bulk is N(0, sigma) truncated to [-1, 1]
};

std::vector<double> Sample(Distribution d, std::size_t n, std::uint64_t seed,
                           const OutlierMixture& mixture = {});

Tensor SyntheticTensor(Distribution d, std::vector<std::size_t> shape,
                       std::uint64_t seed, const OutlierMixture& mixture = {});

// Shapes of a ResNet-like stack of weight tensors, each with at least
// `min_elements` elements.
std::vector<std::vector<std::size_t>> WeightCorpusShapes(std::size_t count,
                                                         std::size_t min_elements);

}  // namespace octav

#endif  // OCTAV_CORE_SYNTHETIC_HPP_
