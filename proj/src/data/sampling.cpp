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

#include "pcfsl/data/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

namespace pcfsl {

PointCloud sample_points(const PointCloud& cloud, std::size_t count, Rng& rng) {
  require(cloud.size() >= 1, ErrorCode::kInvalidArgument, "sample_points: empty cloud");
  require(count >= 1, ErrorCode::kInvalidArgument, "sample_points: count must be positive");
  const std::size_t n = cloud.size();
  std::vector<std::size_t> pick(count);
  if (n >= count) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    // Partial Fisher-Yates: the first `count` slots become a uniform sample.
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t j = i + uniform_index(rng, n - i);
      std::swap(perm[i], perm[j]);
    }
    std::copy_n(perm.begin(), count, pick.begin());
  } else {
    for (auto& p : pick) p = uniform_index(rng, n);
  }
  PointCloud out;
  out.points.resize(static_cast<Eigen::Index>(count), 3);
  for (std::size_t i = 0; i < count; ++i)
    out.points.row(static_cast<Eigen::Index>(i)) = cloud.points.row(static_cast<Eigen::Index>(pick[i]));
  return out;
}

PointCloud augment(const PointCloud& cloud, const AugmentParams& params, Rng& rng) {
  require(params.jitter_sigma >= 0.0, ErrorCode::kInvalidArgument, "augment: jitter_sigma must be >= 0");
  PointCloud out = cloud;
  if (params.jitter_sigma > 0.0) {
    std::normal_distribution<double> noise(0.0, params.jitter_sigma);
    for (Eigen::Index i = 0; i < out.points.rows(); ++i)
      for (int c = 0; c < 3; ++c)
        out.points(i, c) += static_cast<float>(std::clamp(noise(rng), -params.jitter_clip, params.jitter_clip));
  }
  if (params.rotate) {
    const double angle = uniform01(rng) * 2.0 * std::numbers::pi;
    const float cs = static_cast<float>(std::cos(angle));
    const float sn = static_cast<float>(std::sin(angle));
    Eigen::Matrix3f rot;
    rot << cs, 0, sn, 0, 1, 0, -sn, 0, cs;
    out.points = out.points * rot.transpose();
  }
  return out;
}

}  // namespace pcfsl
