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
#ifndef OCTAV_CORE_TENSOR_HPP_
#define OCTAV_CORE_TENSOR_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace octav {

// On-disk element type. Values are always held as double in memory.
enum class StorageDtype : std::uint8_t {
  kFloat32 = 1,
  kFloat64 = 2,
};

// Dense row-major tensor of finite doubles. Immutable after construction.
class Tensor {
 public:
  // Throws Error(kInvalidArgument) unless every dimension is positive,
  // product(shape) == data.size(), and every value is finite.
  Tensor(std::vector<double> data, std::vector<std::size_t> shape,
         StorageDtype storage = StorageDtype::kFloat64);

  // Rank-1 tensor over `data`.
  static Tensor Vector(std::vector<double> data);

  std::span<const double> data() const noexcept { return data_; }
  const std::vector<std::size_t>& shape() const noexcept { return shape_; }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t rank() const noexcept { return shape_.size(); }
  StorageDtype storage() const noexcept { return storage_; }

  // Same values and shape, different on-disk dtype.
  Tensor WithStorage(StorageDtype storage) const;

  // Bitwise equality of values and shape (storage dtype ignored).
  friend bool operator==(const Tensor& a, const Tensor& b);

 private:
  std::vector<double> data_;
  std::vector<std::size_t> shape_;
  StorageDtype storage_;
};

// Which elements share a clipping scalar.
struct Granularity {
  enum class Kind { kPerTensor, kPerRow };

  Kind kind = Kind::kPerTensor;
  std::size_t axis = 0;  // Only meaningful for kPerRow.

  static Granularity PerTensor() { return {}; }
  static Granularity PerRow(std::size_t axis) { return {Kind::kPerRow, axis}; }

  friend bool operator==(const Granularity&, const Granularity&) = default;
};

// Partition of a tensor's flat indices into scaling groups.
//
// PerRow(axis) on a shape (d0, ..., dk) puts element (i0, ..., ik) into
// group i_axis. Each group is `outer` runs of `inner` contiguous elements,
// where outer = d0 * ... * d(axis-1) and inner = d(axis+1) * ... * dk.
// PerRow(0) on a (K, C, R, S) convolution weight therefore yields K groups of
// C*R*S contiguous elements.
class GroupView {
 public:
  GroupView() = default;

  Granularity granularity() const noexcept { return granularity_; }
  std::size_t group_count() const noexcept { return group_count_; }
  std::size_t group_size() const noexcept { return outer_ * inner_; }
  std::size_t total_size() const noexcept { return group_count_ * outer_ * inner_; }

  // True when every group is a single contiguous run.
  bool contiguous() const noexcept { return outer_ == 1 || group_count_ == 1; }

  std::size_t GroupOf(std::size_t flat_index) const noexcept {
    return (flat_index / inner_) % group_count_;
  }

  // Calls fn(flat_index) for every element of group g, in ascending order.
  template <typename F>
  void ForEachIndex(std::size_t g, F&& fn) const {
    for (std::size_t o = 0; o < outer_; ++o) {
      const std::size_t base = (o * group_count_ + g) * inner_;
      for (std::size_t i = 0; i < inner_; ++i) fn(base + i);
    }
  }

  // Copies the elements of group g out of `data` in ForEachIndex order.
  std::vector<double> Gather(std::span<const double> data, std::size_t g) const;

 private:
  friend GroupView MakeGroupView(const std::vector<std::size_t>& shape,
                                 Granularity granularity);

  Granularity granularity_;
  std::size_t group_count_ = 1;
  std::size_t outer_ = 1;
  std::size_t inner_ = 1;
};

// Throws Error(kInvalidArgument) when the row axis is out of range.
GroupView MakeGroupView(const std::vector<std::size_t>& shape,
                        Granularity granularity);
GroupView MakeGroupView(const Tensor& t, Granularity granularity);

// Per-group element spans. Borrowed from the tensor when the view is
// contiguous, otherwise gathered into owned storage.
class GroupedData {
 public:
  GroupedData(std::span<const double> data, const GroupView& view);

  GroupedData(const GroupedData&) = delete;
  GroupedData& operator=(const GroupedData&) = delete;

  std::size_t size() const noexcept { return groups_.size(); }
  std::span<const double> operator[](std::size_t g) const { return groups_[g]; }

 private:
  std::vector<double> storage_;
  std::vector<std::span<const double>> groups_;
};

// OCTV file I/O. See README for the byte layout.
Tensor LoadTensor(const std::filesystem::path& path);
void SaveTensor(const Tensor& t, const std::filesystem::path& path);

}  // namespace octav

#endif  // OCTAV_CORE_TENSOR_HPP_
