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

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "pcfsl/common.hpp"

namespace pcfsl {

using Points = Eigen::Matrix<float, Eigen::Dynamic, 3, Eigen::RowMajor>;

/// An unordered set of 3D points.
struct PointCloud {
  Points points;

  std::size_t size() const { return static_cast<std::size_t>(points.rows()); }

  /// Throws unless the cloud is nonempty and every coordinate is finite.
  void validate() const;
};

struct LabeledInstance {
  PointCloud cloud;
  std::string label;
  std::string source_id;
};

/// Centers at the centroid and scales so the farthest point lies on the unit sphere.
void normalize_unit_sphere(PointCloud& cloud);

/// Converts a cloud to the network scalar type (n x 3).
Matrix to_matrix(const PointCloud& cloud);

}  // namespace pcfsl
