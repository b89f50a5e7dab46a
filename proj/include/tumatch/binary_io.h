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

#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace tumatch {

// Versioned container shared by model and equilibrium files:
//   magic[4] | u32 version | u64 d | u64 size_x | u64 size_y | u32 direction
// followed by row-major little-endian float64 blocks.
struct ContainerHeader {
  std::array<char, 4> magic{};
  uint32_t version = 1;
  uint64_t d = 0;
  uint64_t size_x = 0;
  uint64_t size_y = 0;
  uint32_t direction = 0;
};

inline constexpr uint32_t kContainerVersion = 1;
inline constexpr uint32_t kNoDirection = 0xFFFFFFFFu;

void WriteHeader(std::ostream& out, const ContainerHeader& header);
// Throws DataError on truncation, wrong magic, or unsupported version.
ContainerHeader ReadHeader(std::istream& in, const std::array<char, 4>& magic);

void WriteU64(std::ostream& out, uint64_t value);
uint64_t ReadU64(std::istream& in);
void WriteF64Block(std::ostream& out, std::span<const double> values);
void ReadF64Block(std::istream& in, std::span<double> values);

}  // namespace tumatch
