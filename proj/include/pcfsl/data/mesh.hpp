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

#include <array>
#include <filesystem>
#include <vector>

#include "pcfsl/data/point_cloud.hpp"
#include "pcfsl/rng.hpp"

namespace pcfsl {

struct TriangleMesh {
  std::vector<Eigen::Vector3f> vertices;
  std::vector<std::array<int, 3>> faces;
};

/// Reads an OFF mesh (polygons are fan-triangulated). Also accepts the
/// "OFFn m k" header variant found in parts of ModelNet40.
TriangleMesh read_off(const std::filesystem::path& path);

/// Reads vertex and face records of a Wavefront OBJ file.
TriangleMesh read_obj(const std::filesystem::path& path);

/// Reads whitespace- or comma-separated xyz rows (extra columns ignored).
PointCloud read_xyz(const std::filesystem::path& path);

/// Uniform area-weighted surface sampling.
PointCloud sample_surface(const TriangleMesh& mesh, std::size_t count, Rng& rng);

}  // namespace pcfsl
