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

#include "pcfsl/data/point_cloud.hpp"

#include <cmath>

namespace pcfsl {

void PointCloud::validate() const {
  require(points.rows() >= 1, ErrorCode::kInvalidArgument, "point cloud is empty");
  require(points.allFinite(), ErrorCode::kInvalidArgument, "point cloud has non-finite coordinates");
}

void normalize_unit_sphere(PointCloud& cloud) {
  if (cloud.points.rows() == 0) return;
  const Eigen::RowVector3f centroid = cloud.points.colwise().mean();
  cloud.points.rowwise() -= centroid;
  const float radius = cloud.points.rowwise().norm().maxCoeff();
  if (radius > 0.0f) cloud.points /= radius;
}

Matrix to_matrix(const PointCloud& cloud) { return cloud.points.cast<Real>(); }

}  // namespace pcfsl
