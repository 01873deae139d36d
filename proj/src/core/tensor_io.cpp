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
// OCTV layout (little-endian, no padding):
//   "OCTV" | u16 version (=1) | u8 dtype (1=f32, 2=f64) | u8 rank |
//   rank x u64 dims | payload, row-major

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>

#include "core/error.hpp"
#include "core/tensor.hpp"

namespace octav {
namespace {

constexpr char kMagic[4] = {'O', 'C', 'T', 'V'};
constexpr std::uint16_t kVersion = 1;
constexpr std::size_t kFixedHeader = 8;

void PutLe(std::string& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) {
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
}

std::uint64_t GetLe(const unsigned char* p, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= std::uint64_t{p[i]} << (8 * i);
  return v;
}

[[noreturn]] void Malformed(const std::filesystem::path& path,
                            const std::string& what) {
  Fail(ErrorCode::kFormat, path.string() + ": " + what);
}

}  // namespace

Tensor LoadTensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorCode::kIo, "cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  if (in.bad()) Fail(ErrorCode::kIo, "read failed for " + path.string());

  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() < kFixedHeader) Malformed(path, "malformed header");
  if (std::memcmp(p, kMagic, 4) != 0) Malformed(path, "bad magic");
  const auto version = static_cast<std::uint16_t>(GetLe(p + 4, 2));
  if (version != kVersion) {
    Malformed(path, "unsupported format version " + std::to_string(version));
  }
  const unsigned dtype_code = p[6];
  std::size_t elem_bytes = 0;
  StorageDtype dtype;
  if (dtype_code == 1) {
    dtype = StorageDtype::kFloat32;
    elem_bytes = 4;
  } else if (dtype_code == 2) {
    dtype = StorageDtype::kFloat64;
    elem_bytes = 8;
  } else {
    Malformed(path, "unsupported dtype code " + std::to_string(dtype_code));
  }
  const std::size_t rank = p[7];
  if (rank == 0) Malformed(path, "malformed header: rank 0");
  if (bytes.size() < kFixedHeader + 8 * rank) {
    Malformed(path, "malformed header: truncated dimensions");
  }

  std::vector<std::size_t> shape(rank);
  std::size_t count = 1;
  for (std::size_t i = 0; i < rank; ++i) {
    const std::uint64_t d = GetLe(p + kFixedHeader + 8 * i, 8);
    if (d == 0) Malformed(path, "empty tensor");
    if (count > std::numeric_limits<std::size_t>::max() / d) {
      Malformed(path, "malformed header: element count overflows");
    }
    shape[i] = static_cast<std::size_t>(d);
    count *= shape[i];
  }

  const std::size_t offset = kFixedHeader + 8 * rank;
  const std::size_t payload = bytes.size() - offset;
  if (payload / elem_bytes < count) Malformed(path, "truncated payload");
  if (payload != count * elem_bytes) Malformed(path, "trailing bytes after payload");

  std::vector<double> data(count);
  const unsigned char* src = p + offset;
  for (std::size_t i = 0; i < count; ++i) {
    double v;
    if (dtype == StorageDtype::kFloat32) {
      v = std::bit_cast<float>(static_cast<std::uint32_t>(GetLe(src + 4 * i, 4)));
    } else {
      v = std::bit_cast<double>(GetLe(src + 8 * i, 8));
    }
    if (!std::isfinite(v)) {
      Malformed(path, "non-finite value at index " + std::to_string(i));
    }
    data[i] = v;
  }
  return Tensor(std::move(data), std::move(shape), dtype);
}

void SaveTensor(const Tensor& t, const std::filesystem::path& path) {
  if (t.rank() > 255) {
    Fail(ErrorCode::kInvalidArgument, "rank exceeds OCTV limit of 255");
  }
  const bool f32 = t.storage() == StorageDtype::kFloat32;
  std::string out;
  out.reserve(kFixedHeader + 8 * t.rank() + t.size() * (f32 ? 4 : 8));
  out.append(kMagic, 4);
  PutLe(out, kVersion, 2);
  out.push_back(static_cast<char>(t.storage()));
  out.push_back(static_cast<char>(t.rank()));
  for (const std::size_t d : t.shape()) PutLe(out, d, 8);
  for (const double v : t.data()) {
    if (f32) {
      if (std::fabs(v) > std::numeric_limits<float>::max()) {
        Fail(ErrorCode::kInvalidArgument, "value out of f32 range");
      }
      PutLe(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)), 4);
    } else {
      PutLe(out, std::bit_cast<std::uint64_t>(v), 8);
    }
  }

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) Fail(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  os.write(out.data(), static_cast<std::streamsize>(out.size()));
  os.close();
  if (!os) Fail(ErrorCode::kIo, "write failed for " + path.string());
}

}  // namespace octav
