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
#include <string>
#include <vector>

#include "pcfsl/data/benchmark.hpp"
#include "pcfsl/data/toy.hpp"

namespace pcfsl {

struct FileError {
  std::string path;
  std::string message;
};

struct LoadResult {
  std::vector<LabeledInstance> instances;
  std::vector<FileError> errors;
};

struct LoadOptions {
  /// Points drawn from each mesh surface at ingestion.
  std::size_t surface_points = 2048;
  std::uint64_t seed = 0;
  /// Only used for the synthetic benchmark, which is generated, not read.
  ToyParams toy;
};

/// Reads a raw dataset in its published layout:
///  - ModelNet40: the 2048-point HDF5 release (ply_data_*.h5 + shape_names.txt),
///    or the OFF mesh tree <root>/<class>/<train|test>/*.off.
///  - ShapeNet70: <root>/<class>/**/model files (.obj, .off, .xyz, .pts), where
///    <class> is a class name or its WordNet id.
///  - ScanObjectNN: the PB_T50_RS HDF5 files (*_augmentedrot_scale75.h5), or
///    per-object .bin files under <root>/<class>/.
/// Clouds are normalized to the unit sphere. Unreadable files are reported in
/// `errors` and skipped. Throws ErrorCode::kNotFound when nothing is found.
LoadResult load_dataset(const std::filesystem::path& root, Benchmark benchmark, const LoadOptions& options = {});

/// ScanObjectNN integer label -> class name, in the dataset's label order.
const std::vector<std::string>& scanobjectnn_label_names();

}  // namespace pcfsl
