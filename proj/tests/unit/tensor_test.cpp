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

#include <gtest/gtest.h>

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "core/reduce.hpp"
#include "core/tensor.hpp"
#include "test_util.hpp"

namespace octav {
namespace {

using testing::TempDir;
using testing::ThrowsError;

// Hand-assembled OCTV bytes, independent of the writer under test.
class RawFile {
 public:
  RawFile& Bytes(std::string_view s) {
    buf_.append(s);
    return *this;
  }
  template <typename T>
  RawFile& Le(T v) {
    auto bits = std::bit_cast<std::array<char, sizeof(T)>>(v);
    buf_.append(bits.data(), bits.size());
    return *this;
  }
  RawFile& Header(std::uint8_t dtype, const std::vector<std::uint64_t>& dims) {
    Bytes("OCTV").Le<std::uint16_t>(1).Le<std::uint8_t>(dtype);
    Le<std::uint8_t>(static_cast<std::uint8_t>(dims.size()));
    for (auto d : dims) Le<std::uint64_t>(d);
    return *this;
  }
  void Write(const std::filesystem::path& p) const {
    std::ofstream(p, std::ios::binary).write(buf_.data(), buf_.size());
  }
  const std::string& str() const { return buf_; }

 private:
  std::string buf_;
};

std::string ReadAll(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

TEST(TensorTest, RejectsEmptyAndNonFinite) {
  EXPECT_TRUE(ThrowsError([] { Tensor({}, {0}); }, ErrorCode::kInvalidArgument,
                          "empty tensor"));
  EXPECT_TRUE(ThrowsError([] { Tensor({1.0, std::nan("")}, {2}); },
                          ErrorCode::kInvalidArgument, "non-finite value at index 1"));
  EXPECT_TRUE(ThrowsError([] { Tensor({1.0, 2.0}, {3}); }, ErrorCode::kInvalidArgument));
}

TEST(TensorIoTest, LoadsHandWrittenFile) {
  TempDir dir;
  RawFile f;
  f.Header(2, {2, 2});
  for (double v : {1.0, 2.0, 3.0, 4.0}) f.Le<double>(v);
  f.Write(dir / "a.octv");
  const Tensor t = LoadTensor(dir / "a.octv");
  EXPECT_EQ(t.shape(), (std::vector<std::size_t>{2, 2}));
  EXPECT_EQ(std::vector<double>(t.data().begin(), t.data().end()),
            (std::vector<double>{1, 2, 3, 4}));
  EXPECT_EQ(t.storage(), StorageDtype::kFloat64);
}

TEST(TensorIoTest, SaveMatchesHandWrittenBytes) {
  TempDir dir;
  SaveTensor(Tensor({0.5}, {1}), dir / "b.octv");
  RawFile f;
  f.Header(2, {1}).Le<double>(0.5);
  EXPECT_EQ(ReadAll(dir / "b.octv"), f.str());
}

TEST(TensorIoTest, RoundTripIsBitExact) {
  TempDir dir;
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal;
  std::vector<double> v(60);
  for (double& x : v) x = normal(rng) * 1e3;
  v[3] = -0.0;
  v[4] = std::numeric_limits<double>::denorm_min();
  const Tensor t(v, {3, 4, 5});
  SaveTensor(t, dir / "c.octv");
  const Tensor back = LoadTensor(dir / "c.octv");
  EXPECT_TRUE(back == t);
  EXPECT_TRUE(std::signbit(back.data()[3]));
}

TEST(TensorIoTest, Float32StorageRoundTrip) {
  TempDir dir;
  const Tensor t = Tensor({0.25, -1.5, 3.0f / 7.0f}, {3}, StorageDtype::kFloat32);
  SaveTensor(t, dir / "f.octv");
  EXPECT_EQ(std::filesystem::file_size(dir / "f.octv"), 4u + 2 + 1 + 1 + 8 + 3 * 4);
  const Tensor back = LoadTensor(dir / "f.octv");
  EXPECT_EQ(back.storage(), StorageDtype::kFloat32);
  EXPECT_TRUE(back == t);
}

TEST(TensorIoTest, Float32OutOfRangeRefused) {
  TempDir dir;
  const Tensor t = Tensor({1e300}, {1}, StorageDtype::kFloat32);
  EXPECT_TRUE(ThrowsError([&] { SaveTensor(t, dir / "g.octv"); },
                          ErrorCode::kInvalidArgument, "f32"));
}

TEST(TensorIoTest, MalformedFilesRejected) {
  TempDir dir;
  const auto path = dir / "bad.octv";
  auto expect_format = [&](const RawFile& f, const std::string& needle) {
    f.Write(path);
    EXPECT_TRUE(ThrowsError([&] { LoadTensor(path); }, ErrorCode::kFormat, needle))
        << needle;
  };
  expect_format(RawFile().Bytes("OC"), "malformed header");
  expect_format(RawFile().Bytes("XXXX").Le<std::uint16_t>(1).Le<std::uint16_t>(0),
                "bad magic");
  {
    RawFile f;
    f.Bytes("OCTV").Le<std::uint16_t>(2).Le<std::uint8_t>(2).Le<std::uint8_t>(1);
    expect_format(f, "unsupported format version");
  }
  expect_format(RawFile().Header(9, {1}).Le<double>(1.0), "unsupported dtype code 9");
  expect_format(RawFile().Header(2, {0}), "empty tensor");
  {
    RawFile f;
    f.Bytes("OCTV").Le<std::uint16_t>(1).Le<std::uint8_t>(2).Le<std::uint8_t>(2);
    f.Le<std::uint64_t>(4);
    expect_format(f, "truncated dimensions");
  }
  expect_format(RawFile().Header(2, {3}).Le<double>(1.0).Le<double>(2.0),
                "truncated payload");
  expect_format(RawFile().Header(2, {1}).Le<double>(1.0).Le<std::uint8_t>(0),
                "trailing bytes");
  expect_format(RawFile().Header(2, {2}).Le<double>(1.0).Le<double>(std::nan("")),
                "non-finite value at index 1");
  expect_format(RawFile().Header(1, {1}).Le<float>(INFINITY), "non-finite value at index 0");
}

TEST(TensorIoTest, MissingFileAndUnwritablePathAreIoErrors) {
  TempDir dir;
  EXPECT_TRUE(ThrowsError([&] { LoadTensor(dir / "missing.octv"); }, ErrorCode::kIo));
  EXPECT_TRUE(ThrowsError(
      [&] { SaveTensor(Tensor({1.0}, {1}), dir / "no_such_dir" / "x.octv"); },
      ErrorCode::kIo));
}

TEST(GroupViewTest, CountsAndSizes) {
  const std::vector<std::size_t> shape{4, 8};
  const GroupView rows = MakeGroupView(shape, Granularity::PerRow(0));
  EXPECT_EQ(rows.group_count(), 4u);
  EXPECT_EQ(rows.group_size(), 8u);
  const GroupView whole = MakeGroupView(shape, Granularity::PerTensor());
  EXPECT_EQ(whole.group_count(), 1u);
  EXPECT_EQ(whole.group_size(), 32u);
  EXPECT_TRUE(ThrowsError([&] { MakeGroupView(shape, Granularity::PerRow(2)); },
                          ErrorCode::kInvalidArgument, "out of range"));
}

TEST(GroupViewTest, ConvWeightRowsAreContiguousOutputChannels) {
  const GroupView v = MakeGroupView({5, 3, 2, 2}, Granularity::PerRow(0));
  EXPECT_EQ(v.group_count(), 5u);
  EXPECT_EQ(v.group_size(), 12u);
  EXPECT_TRUE(v.contiguous());
  std::vector<std::size_t> idx;
  v.ForEachIndex(2, [&](std::size_t i) { idx.push_back(i); });
  for (std::size_t k = 0; k < idx.size(); ++k) EXPECT_EQ(idx[k], 24 + k);
}

TEST(GroupViewTest, GroupsPartitionIndices) {
  const std::vector<std::size_t> shape{3, 4, 5};
  for (std::size_t axis = 0; axis < shape.size(); ++axis) {
    const GroupView v = MakeGroupView(shape, Granularity::PerRow(axis));
    EXPECT_EQ(v.group_count(), shape[axis]);
    std::vector<int> seen(60, 0);
    for (std::size_t g = 0; g < v.group_count(); ++g) {
      v.ForEachIndex(g, [&](std::size_t i) {
        ++seen[i];
        // Element (i0, i1, i2) belongs to group i_axis.
        const std::size_t coord[] = {i / 20, (i / 5) % 4, i % 5};
        EXPECT_EQ(coord[axis], g);
        EXPECT_EQ(v.GroupOf(i), g);
      });
    }
    for (int c : seen) EXPECT_EQ(c, 1);
  }
}

TEST(GroupViewTest, GroupedDataGathersStridedGroups) {
  std::vector<double> data(12);
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = static_cast<double>(i);
  const GroupView v = MakeGroupView({3, 4}, Granularity::PerRow(1));
  const GroupedData groups(data, v);
  ASSERT_EQ(groups.size(), 4u);
  EXPECT_EQ(std::vector<double>(groups[1].begin(), groups[1].end()),
            (std::vector<double>{1, 5, 9}));
}

TEST(ReduceSumTest, Examples) {
  const std::vector<double> v{1, 2, 3, 4};
  EXPECT_EQ(ReduceSum(v), 10.0);
  EXPECT_EQ(ReduceSum(std::span<const double>{}), 0.0);
}

TEST(ReduceSumTest, BitIdenticalAcrossCallsAndThreadCounts) {
  const std::vector<double> tenths(1'000'000, 0.1);
  const double ref = ReduceSum(tenths);
  EXPECT_EQ(std::bit_cast<std::uint64_t>(ReduceSum(tenths)), std::bit_cast<std::uint64_t>(ref));
  for (int threads : {2, 3, 8}) {
    EXPECT_EQ(std::bit_cast<std::uint64_t>(ReduceSum(tenths, threads)),
              std::bit_cast<std::uint64_t>(ref));
  }
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  std::vector<double> noisy(123'457);
  for (double& x : noisy) x = u(rng);
  const double a = ReduceSum(noisy, 1);
  EXPECT_EQ(std::bit_cast<std::uint64_t>(ReduceSum(noisy, 5)), std::bit_cast<std::uint64_t>(a));
  // Pairwise summation keeps the error far below a serial loop's n * eps.
  EXPECT_NEAR(ReduceSum(tenths), 100000.0, 1e-9);
}

}  // namespace
}  // namespace octav
