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
#ifndef OCTAV_CORE_REDUCE_HPP_
#define OCTAV_CORE_REDUCE_HPP_

#include <cstddef>
#include <future>
#include <span>

namespace octav {

inline constexpr std::size_t kPairwiseLeaf = 64;

// Fixed-order pairwise tree over [begin, end). Leaves hold at most
// kPairwiseLeaf indices and are folded serially by `leaf(begin, end)`;
// interior nodes split at the midpoint and combine with operator+.
// The tree shape depends only on the range, so results are bit-identical
// whatever `threads` is.
template <typename Acc, typename Leaf>
Acc PairwiseReduce(std::size_t begin, std::size_t end, const Leaf& leaf,
                   int threads = 1) {
  if (end - begin <= kPairwiseLeaf) return leaf(begin, end);
  const std::size_t mid = begin + (end - begin) / 2;
  if (threads > 1) {
    const int left_threads = threads / 2;
    auto left = std::async(std::launch::async, [&] {
      return PairwiseReduce<Acc>(begin, mid, leaf, left_threads);
    });
    Acc right = PairwiseReduce<Acc>(mid, end, leaf, threads - left_threads);
    return left.get() + right;
  }
  return PairwiseReduce<Acc>(begin, mid, leaf, 1) +
         PairwiseReduce<Acc>(mid, end, leaf, 1);
}

// Pairwise sum of f(i) for i in [0, n).
template <typename F>
double PairwiseSum(std::size_t n, const F& f, int threads = 1) {
  return PairwiseReduce<double>(
      0, n,
      [&f](std::size_t b, std::size_t e) {
        double acc = 0.0;
        for (std::size_t i = b; i < e; ++i) acc += f(i);
        return acc;
      },
      threads);
}

double ReduceSum(std::span<const double> values, int threads = 1);

}  // namespace octav

#endif  // OCTAV_CORE_REDUCE_HPP_
