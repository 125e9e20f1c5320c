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
#include <vector>

#include "pcfsl/data/point_cloud.hpp"

namespace pcfsl {

/// Synthetic 10-class benchmark: five primitive surfaces (sphere, cube,
/// cylinder, cone, torus). Train classes ("*_a") and test classes ("*_b") use
/// disjoint shape-parameter ranges, so every test class is unseen.
struct ToyParams {
  std::size_t instances_per_class = 60;
  std::size_t points_per_instance = 512;
  /// Gaussian surface noise, in units of the normalized radius.
  double noise_sigma = 0.02;
  /// Fraction of points replaced by uniform clutter in the bounding cube.
  double outlier_fraction = 0.0;
  /// Apply a uniformly random 3D rotation instead of only an up-axis one.
  bool random_tilt = false;
  std::uint64_t seed = 7;
};

std::vector<LabeledInstance> generate_toy(const ToyParams& params);

}  // namespace pcfsl
