// Copyright 2026 The Derail Authors.
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

#ifndef DERAIL_HASHING_H_
#define DERAIL_HASHING_H_

#include <cstdint>
#include <string>
#include <string_view>

namespace derail {

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;

// 64-bit FNV-1a. Stable across platforms, used for config hashes, vocabulary
// hashes, checkpoint checksums and per-example child seeds.
std::uint64_t Fnv1a64(std::string_view bytes, std::uint64_t seed = kFnvOffset);

// Lowercase 16-digit hex rendering.
std::string HexDigest(std::uint64_t value);

// Deterministic child seed from a master seed and a label.
std::uint64_t DeriveSeed(std::uint64_t master, std::string_view label);

}  // namespace derail

#endif  // DERAIL_HASHING_H_
