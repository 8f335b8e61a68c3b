// Copyright 2026 The ldp_robust Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Binary file format for batch collections. All integers little-endian:
//
//   "LDPB" | version u16 | n u64 | k u64 | d u32 | eps_num u64 | eps_den u64
//   | seed u64 | n*k packed reports, row-major, bit j of a report in byte j/8
//   at position j%8 | optional n label bytes (0 good, 1 adversarial)

#ifndef LDP_ROBUST_COLLECTION_IO_H_
#define LDP_ROBUST_COLLECTION_IO_H_

#include <cstdint>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "ldp_robust/adversary.h"
#include "ldp_robust/error.h"

namespace ldp_robust {

inline constexpr char kCollectionMagic[4] = {'L', 'D', 'P', 'B'};
inline constexpr uint16_t kCollectionVersion = 1;
inline constexpr size_t kCollectionHeaderBytes = 4 + 2 + 8 + 8 + 4 + 8 + 8 + 8;

namespace internal {

template <typename T>
void PutLe(std::vector<uint8_t>& out, T value) {
  for (size_t i = 0; i < sizeof(T); ++i)
    out.push_back(static_cast<uint8_t>(static_cast<uint64_t>(value) >> (8 * i)));
}

template <typename T>
T GetLe(const std::vector<uint8_t>& in, size_t& pos) {
  Require(pos + sizeof(T) <= in.size(), ErrorCode::kFormatError,
          "truncated header");
  uint64_t v = 0;
  for (size_t i = 0; i < sizeof(T); ++i)
    v |= static_cast<uint64_t>(in[pos + i]) << (8 * i);
  pos += sizeof(T);
  return static_cast<T>(v);
}

}  // namespace internal

inline std::vector<uint8_t> EncodeCollection(const BatchCollection& c) {
  std::vector<uint8_t> out(std::begin(kCollectionMagic),
                           std::end(kCollectionMagic));
  internal::PutLe<uint16_t>(out, kCollectionVersion);
  internal::PutLe<uint64_t>(out, static_cast<uint64_t>(c.n()));
  internal::PutLe<uint64_t>(out, static_cast<uint64_t>(c.k()));
  internal::PutLe<uint32_t>(out, static_cast<uint32_t>(c.d()));
  internal::PutLe<uint64_t>(out, c.eps_num);
  internal::PutLe<uint64_t>(out, c.eps_den);
  internal::PutLe<uint64_t>(out, c.seed);
  out.insert(out.end(), c.raw().begin(), c.raw().end());
  if (c.has_truth()) {
    for (BatchLabel l : c.truth()) out.push_back(static_cast<uint8_t>(l));
  }
  return out;
}

inline BatchCollection DecodeCollection(const std::vector<uint8_t>& in) {
  using internal::Require;
  Require(in.size() >= kCollectionHeaderBytes, ErrorCode::kFormatError,
          "file shorter than header");
  Require(std::equal(std::begin(kCollectionMagic), std::end(kCollectionMagic),
                     in.begin()),
          ErrorCode::kFormatError, "bad magic");
  size_t pos = 4;
  const auto version = internal::GetLe<uint16_t>(in, pos);
  Require(version == kCollectionVersion, ErrorCode::kFormatError,
          "unsupported version " + std::to_string(version));
  const auto n = internal::GetLe<uint64_t>(in, pos);
  const auto k = internal::GetLe<uint64_t>(in, pos);
  const auto d = internal::GetLe<uint32_t>(in, pos);
  const auto eps_num = internal::GetLe<uint64_t>(in, pos);
  const auto eps_den = internal::GetLe<uint64_t>(in, pos);
  const auto seed = internal::GetLe<uint64_t>(in, pos);
  Require(d >= static_cast<uint32_t>(kMinAlphabet) &&
              d <= static_cast<uint32_t>(kMaxChannelDimension) && k >= 1,
          ErrorCode::kFormatError, "header dimensions out of range");
  const size_t body = static_cast<size_t>(n * k) * PackedBytes(static_cast<int>(d));
  Require(in.size() - pos == body || in.size() - pos == body + n,
          ErrorCode::kFormatError, "body length does not match header");
  BatchCollection c(static_cast<int64_t>(n), static_cast<int64_t>(k),
                    static_cast<int>(d));
  std::copy_n(in.begin() + pos, body, c.mutable_raw().begin());
  pos += body;
  if (pos < in.size()) {
    std::vector<BatchLabel> labels(n);
    for (size_t b = 0; b < n; ++b) {
      Require(in[pos + b] <= 1, ErrorCode::kFormatError, "bad label byte");
      labels[b] = static_cast<BatchLabel>(in[pos + b]);
    }
    c.set_truth(std::move(labels));
  }
  c.eps_num = eps_num;
  c.eps_den = eps_den;
  c.seed = seed;
  return c;
}

inline void WriteCollection(const BatchCollection& c, const std::string& path) {
  const std::vector<uint8_t> bytes = EncodeCollection(c);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  internal::Require(static_cast<bool>(f), ErrorCode::kIoError,
                    "cannot open " + path);
  f.write(reinterpret_cast<const char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
  internal::Require(static_cast<bool>(f), ErrorCode::kIoError,
                    "write failed for " + path);
}

inline BatchCollection ReadCollection(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  internal::Require(static_cast<bool>(f), ErrorCode::kIoError,
                    "cannot open " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                             std::istreambuf_iterator<char>());
  return DecodeCollection(bytes);
}

}  // namespace ldp_robust

#endif  // LDP_ROBUST_COLLECTION_IO_H_
