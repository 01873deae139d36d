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
#include "core/tensor.hpp"

#include <cmath>
#include <cstring>
#include <string>
#include <utility>

#include "core/error.hpp"
#include "core/reduce.hpp"

namespace octav {

Tensor::Tensor(std::vector<double> data, std::vector<std::size_t> shape,
               StorageDtype storage)
    : data_(std::move(data)), shape_(std::move(shape)), storage_(storage) {
  Require(!shape_.empty(), "tensor rank must be at least 1");
  std::size_t count = 1;
  for (const std::size_t d : shape_) {
    if (d == 0) Fail(ErrorCode::kInvalidArgument, "empty tensor");
    count *= d;
  }
  Require(count == data_.size(),
          "shape holds " + std::to_string(count) + " elements but data has " +
              std::to_string(data_.size()));
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) {
      Fail(ErrorCode::kInvalidArgument,
           "non-finite value at index " + std::to_string(i));
    }
  }
}

Tensor Tensor::Vector(std::vector<double> data) {
  const std::size_t n = data.size();
  return Tensor(std::move(data), {n});
}

Tensor Tensor::WithStorage(StorageDtype storage) const {
  Tensor copy = *this;
  copy.storage_ = storage;
  return copy;
}

bool operator==(const Tensor& a, const Tensor& b) {
  return a.shape_ == b.shape_ && a.data_.size() == b.data_.size() &&
         std::memcmp(a.data_.data(), b.data_.data(),
                     a.data_.size() * sizeof(double)) == 0;
}

GroupView MakeGroupView(const std::vector<std::size_t>& shape,
                        Granularity granularity) {
  GroupView view;
  view.granularity_ = granularity;
  std::size_t total = 1;
  for (const std::size_t d : shape) total *= d;
  if (granularity.kind == Granularity::Kind::kPerTensor) {
    view.group_count_ = 1;
    view.outer_ = 1;
    view.inner_ = total;
    return view;
  }
  if (granularity.axis >= shape.size()) {
    Fail(ErrorCode::kInvalidArgument,
         "row axis " + std::to_string(granularity.axis) +
             " out of range for rank " + std::to_string(shape.size()));
  }
  view.group_count_ = shape[granularity.axis];
  view.outer_ = 1;
  for (std::size_t i = 0; i < granularity.axis; ++i) view.outer_ *= shape[i];
  view.inner_ = 1;
  for (std::size_t i = granularity.axis + 1; i < shape.size(); ++i) {
    view.inner_ *= shape[i];
  }
  return view;
}

GroupView MakeGroupView(const Tensor& t, Granularity granularity) {
  return MakeGroupView(t.shape(), granularity);
}

std::vector<double> GroupView::Gather(std::span<const double> data,
                                      std::size_t g) const {
  std::vector<double> out;
  out.reserve(group_size());
  ForEachIndex(g, [&](std::size_t i) { out.push_back(data[i]); });
  return out;
}

GroupedData::GroupedData(std::span<const double> data, const GroupView& view) {
  groups_.reserve(view.group_count());
  if (view.contiguous()) {
    const std::size_t n = view.group_size();
    for (std::size_t g = 0; g < view.group_count(); ++g) {
      groups_.push_back(data.subspan(g * n, n));
    }
    return;
  }
  storage_.reserve(view.total_size());
  for (std::size_t g = 0; g < view.group_count(); ++g) {
    view.ForEachIndex(g, [&](std::size_t i) { storage_.push_back(data[i]); });
  }
  const std::size_t n = view.group_size();
  const std::span<const double> all(storage_);
  for (std::size_t g = 0; g < view.group_count(); ++g) {
    groups_.push_back(all.subspan(g * n, n));
  }
}

double ReduceSum(std::span<const double> values, int threads) {
  return PairwiseSum(
      values.size(), [values](std::size_t i) { return values[i]; }, threads);
}

}  // namespace octav
