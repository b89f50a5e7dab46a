// Copyright 2026 The tumatch Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "tumatch/binary_io.h"

#include <bit>
#include <istream>
#include <ostream>
#include <string>

#include "tumatch/common.h"

namespace tumatch {
namespace {

template <typename T>
void WriteLe(std::ostream& out, T value) {
  unsigned char bytes[sizeof(T)];
  for (size_t i = 0; i < sizeof(T); ++i) {
    bytes[i] = static_cast<unsigned char>(value >> (8 * i));
  }
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T ReadLe(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) {
    throw DataError("truncated binary container");
  }
  T value = 0;
  for (size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(bytes[i]) << (8 * i);
  return value;
}

}  // namespace

void WriteHeader(std::ostream& out, const ContainerHeader& header) {
  out.write(header.magic.data(), 4);
  WriteLe<uint32_t>(out, header.version);
  WriteLe<uint64_t>(out, header.d);
  WriteLe<uint64_t>(out, header.size_x);
  WriteLe<uint64_t>(out, header.size_y);
  WriteLe<uint32_t>(out, header.direction);
}

ContainerHeader ReadHeader(std::istream& in, const std::array<char, 4>& magic) {
  ContainerHeader header;
  if (!in.read(header.magic.data(), 4)) throw DataError("truncated binary container");
  if (header.magic != magic) {
    throw DataError("bad magic, expected '" + std::string(magic.data(), 4) + "'");
  }
  header.version = ReadLe<uint32_t>(in);
  if (header.version != kContainerVersion) {
    throw DataError("unsupported container version " + std::to_string(header.version));
  }
  header.d = ReadLe<uint64_t>(in);
  header.size_x = ReadLe<uint64_t>(in);
  header.size_y = ReadLe<uint64_t>(in);
  header.direction = ReadLe<uint32_t>(in);
  return header;
}

void WriteU64(std::ostream& out, uint64_t value) { WriteLe<uint64_t>(out, value); }
uint64_t ReadU64(std::istream& in) { return ReadLe<uint64_t>(in); }

void WriteF64Block(std::ostream& out, std::span<const double> values) {
  for (double v : values) WriteLe<uint64_t>(out, std::bit_cast<uint64_t>(v));
}

void ReadF64Block(std::istream& in, std::span<double> values) {
  for (double& v : values) v = std::bit_cast<double>(ReadLe<uint64_t>(in));
}

}  // namespace tumatch
