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
#include <string>
#include <string_view>
#include <vector>

#include "pcfsl/data/point_cloud.hpp"

namespace pcfsl {

enum class Benchmark { kModelNet40FS, kShapeNet70FS, kScanObjectNNFS, kToy };

std::string_view benchmark_name(Benchmark b);

/// Accepts the canonical names ("ModelNet40-FS") and short aliases
/// ("modelnet40", "shapenet70", "scanobjectnn", "toy"), case-insensitively.
Benchmark parse_benchmark(std::string_view name);

/// Number of cross-validation folds: 3 split rotations for ScanObjectNN-FS,
/// 5 validation subsets of the training data otherwise.
int fold_count(Benchmark b);

/// Lower-case, spaces and hyphens folded to underscores.
std::string canonical_class(std::string_view name);

struct ClassInfo {
  std::string name;        // canonical
  std::string id;          // WordNet synset offset for ShapeNet70-FS, empty otherwise
  std::size_t expected{};  // instance count in the published split, 0 if not fixed
};

struct ClassTable {
  std::vector<ClassInfo> train;
  std::vector<ClassInfo> test;
};

/// Shipped class lists. `fold` only matters for ScanObjectNN-FS, where it
/// selects which of the three 5-class splits is held out.
ClassTable class_table(Benchmark b, int fold = 0);

/// Every class known to the benchmark, in shipped order.
std::vector<ClassInfo> all_classes(Benchmark b);

struct BenchmarkSplit {
  Benchmark benchmark{};
  std::vector<std::string> train_classes;
  std::vector<std::string> test_classes;
  int fold_index{};
};

struct PartitionedInstances {
  BenchmarkSplit split;
  std::vector<LabeledInstance> train;
  std::vector<LabeledInstance> test;
  /// Classes present in the input but absent from both lists.
  std::vector<std::string> ignored_classes;
};

BenchmarkSplit make_split(Benchmark b, int fold);

/// Partitions labeled instances by the benchmark's class lists.
PartitionedInstances build_split(std::vector<LabeledInstance> instances, Benchmark b, int fold);

/// Splits instance indices into `folds` subsets, per class and near-evenly
/// (per-class subset sizes differ by at most one). Deterministic in `seed`.
std::vector<std::vector<std::size_t>> partition_folds(const std::vector<LabeledInstance>& instances, int folds,
                                                      std::uint64_t seed);

}  // namespace pcfsl
