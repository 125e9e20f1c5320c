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

#include "pcfsl/data/point_cloud.hpp"
#include "pcfsl/rng.hpp"

namespace pcfsl {

/// Draws exactly `count` points: uniformly without replacement when the cloud
/// has at least `count` points, with replacement otherwise.
PointCloud sample_points(const PointCloud& cloud, std::size_t count, Rng& rng);

struct AugmentParams {
  double jitter_sigma = 0.01;
  double jitter_clip = 0.05;
  /// Rotate by a uniform angle about the up (y) axis.
  bool rotate = true;
};

/// Training-time augmentation: clipped Gaussian jitter per coordinate, then a
/// random rotation about the up axis.
PointCloud augment(const PointCloud& cloud, const AugmentParams& params, Rng& rng);

}  // namespace pcfsl
