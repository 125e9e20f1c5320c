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
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "pcfsl/data/loaders.hpp"

namespace pcfsl {

/// On-disk layout of a prepared dataset:
///   points.f32  "PCFSLPTS" magic, u32 version, u32 zero, u64 point total,
///               then little-endian float32 xyz triples for all instances.
///   index.tsv   header "#pcfsl-cache <version> <benchmark> <instances>",
///               then one "source_id<TAB>class<TAB>offset<TAB>count" row per
///               instance (offset and count in points).
inline constexpr std::uint32_t kCacheVersion = 1;

void write_cache(const std::filesystem::path& dir, Benchmark benchmark, const std::vector<LabeledInstance>& instances);

struct CacheContents {
  Benchmark benchmark{};
  std::vector<LabeledInstance> instances;
};

/// Throws kNotFound when the cache is missing and kFormat on a bad magic,
/// a version mismatch or a truncated file.
CacheContents read_cache(const std::filesystem::path& dir);

struct PrepareSummary {
  Benchmark benchmark{};
  std::size_t instances = 0;
  std::size_t train_instances = 0;
  std::size_t test_instances = 0;
  std::size_t train_classes = 0;
  std::size_t test_classes = 0;
  std::map<std::string, std::size_t> per_class;
  std::vector<std::string> ignored_classes;
  std::vector<FileError> errors;
};

/// load_dataset + write_cache. Split statistics use fold 0.
PrepareSummary prepare_data(const std::filesystem::path& root, Benchmark benchmark, const std::filesystem::path& out_dir,
                            const LoadOptions& options = {});

}  // namespace pcfsl
