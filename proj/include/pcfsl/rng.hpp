/*
 * Copyright 2026 The pcfsl Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace pcfsl {

/// Seeded random source. Every stochastic component owns one; nothing draws
/// from global state.
using Rng = std::mt19937_64;

/// SplitMix64 step, used to fan a master seed out to independent streams.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seed for stream `index` of purpose `tag` under `master`.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag, std::uint64_t index = 0) {
  return mix_seed(mix_seed(master ^ mix_seed(tag)) + index);
}

/// 64-bit FNV-1a. Stable across platforms, used for fingerprints and per-file seeds.
constexpr std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Stream tags for derive_seed.
namespace seed_tag {
inline constexpr std::uint64_t kInit = 1;
inline constexpr std::uint64_t kTrainEpisodes = 2;
inline constexpr std::uint64_t kValEpisodes = 3;
inline constexpr std::uint64_t kTestEpisodes = 4;
inline constexpr std::uint64_t kAugment = 5;
inline constexpr std::uint64_t kFolds = 6;
inline constexpr std::uint64_t kIngest = 7;
inline constexpr std::uint64_t kPointSampling = 8;
}  // namespace seed_tag

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

}  // namespace pcfsl
