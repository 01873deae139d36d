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
#include "core/synthetic.hpp"

#include <cmath>
#include <random>

#include "core/error.hpp"

namespace octav {

Distribution ParseDistribution(std::string_view name) {
  if (name == "gaussian") return Distribution::kGaussian;
  if (name == "laplace") return Distribution::kLaplace;
  if (name == "uniform") return Distribution::kUniform;
  if (name == "half-uniform") return Distribution::kHalfUniform;
  if (name == "sparse-gaussian") return Distribution::kSparseGaussian;
  if (name == "outlier") return Distribution::kOutlierMixture;
  Fail(ErrorCode::kInvalidArgument, "unknown distribution '" + std::string(name) + "'");
}

std::string DistributionName(Distribution d) {
  switch (d) {
    case Distribution::kGaussian: return "gaussian";
    case Distribution::kLaplace: return "laplace";
    case Distribution::kUniform: return "uniform";
    case Distribution::kHalfUniform: return "half-uniform";
    case Distribution::kSparseGaussian: return "sparse-gaussian";
    case Distribution::kOutlierMixture: return "outlier";
  }
  return "unknown";
}

std::vector<double> Sample(Distribution d, std::size_t n, std::uint64_t seed,
                           const OutlierMixture& mixture) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> out(n);
  for (double& x : out) {
    switch (d) {
      case Distribution::kGaussian:
        x = normal(rng);
        break;
      case Distribution::kLaplace: {
        // Inverse CDF; u is in (-1/2, 1/2].
        const double u = 0.5 - unit(rng);
        x = (u < 0 ? 1.0 : -1.0) * std::log1p(-2.0 * std::fabs(u));
        break;
      }
      case Distribution::kUniform:
        x = 2.0 * unit(rng) - 1.0;
        break;
      case Distribution::kHalfUniform:
        x = unit(rng);
        break;
      case Distribution::kSparseGaussian: {
        const bool keep = unit(rng) < 0.5;
        const double v = normal(rng);
        x = keep ? v : 0.0;
        break;
      }
      case Distribution::kOutlierMixture:
        if (unit(rng) < mixture.outlier_fraction) {
          const double sign = unit(rng) < 0.5 ? -1.0 : 1.0;
          x = sign * (mixture.outlier_center + mixture.outlier_spread * normal(rng));
        } else {
          do {
            x = mixture.bulk_sigma * normal(rng);
          } while (std::fabs(x) > 1.0);
        }
        break;
    }
  }
  return out;
}

Tensor SyntheticTensor(Distribution d, std::vector<std::size_t> shape,
                       std::uint64_t seed, const OutlierMixture& mixture) {
  std::size_t n = 1;
  for (const std::size_t dim : shape) n *= dim;
  Require(n > 0, "empty tensor");
  return Tensor(Sample(d, n, seed, mixture), std::move(shape));
}

std::vector<std::vector<std::size_t>> WeightCorpusShapes(std::size_t count,
                                                         std::size_t min_elements) {
  // Stages of 3x3 convolutions with doubling width, cycled until `count`
  // shapes exist; any shape below min_elements gets more input channels.
  static constexpr std::size_t kWidths[] = {64, 128, 256, 512};
  std::vector<std::vector<std::size_t>> shapes;
  for (std::size_t i = 0; shapes.size() < count; ++i) {
    const std::size_t k = kWidths[(i / 4) % 4];
    std::size_t c = k;
    while (k * c * 9 < min_elements) c *= 2;
    shapes.push_back({k, c, 3, 3});
  }
  return shapes;
}

}  // namespace octav
