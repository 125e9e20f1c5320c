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

#include "pcfsl/data/toy.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "pcfsl/rng.hpp"

namespace pcfsl {
namespace {

constexpr double kPi = std::numbers::pi;

double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

Eigen::Vector3d unit_sphere_point(Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::Vector3d v(g(rng), g(rng), g(rng));
  const double n = v.norm();
  return n > 0 ? Eigen::Vector3d(v / n) : Eigen::Vector3d(0, 1, 0);
}

enum class Shape { kSphere, kCube, kCylinder, kCone, kTorus };

struct Range {
  double lo, hi;
};

// Train ("a") and test ("b") draw the shape parameter from disjoint ranges.
struct ShapeRanges {
  Range a, b;
};

constexpr std::array<ShapeRanges, 5> kRanges = {{
    {{0.85, 1.0}, {0.65, 0.8}},  // sphere: minor/major axis ratio
    {{0.8, 1.0}, {0.55, 0.75}},  // cube: side ratio
    {{1.5, 2.2}, {2.6, 3.4}},    // cylinder: height / radius
    {{1.2, 1.8}, {2.2, 3.0}},    // cone: height / radius
    {{0.2, 0.3}, {0.36, 0.48}},  // torus: tube / ring radius
}};

Eigen::Vector3d sample_shape(Shape shape, double p, double q, Rng& rng) {
  switch (shape) {
    case Shape::kSphere: {
      // Ellipsoid with axes (1, p, q).
      const Eigen::Vector3d s = unit_sphere_point(rng);
      return {s.x(), p * s.y(), q * s.z()};
    }
    case Shape::kCube: {
      const Eigen::Vector3d half(1.0, p, q);
      const std::array<double, 3> area = {half.y() * half.z(), half.x() * half.z(), half.x() * half.y()};
      const double pick = uniform01(rng) * (area[0] + area[1] + area[2]);
      const int axis = pick < area[0] ? 0 : (pick < area[0] + area[1] ? 1 : 2);
      Eigen::Vector3d v;
      for (int a = 0; a < 3; ++a) v[a] = uniform(rng, -half[a], half[a]);
      v[axis] = uniform01(rng) < 0.5 ? -half[axis] : half[axis];
      return v;
    }
    case Shape::kCylinder: {
      const double r = 1.0, h = p;  // y is the axis
      const double side = 2 * kPi * r * h, cap = kPi * r * r;
      const double pick = uniform01(rng) * (side + 2 * cap);
      const double t = uniform(rng, 0, 2 * kPi);
      if (pick < side) return {r * std::cos(t), uniform(rng, -h / 2, h / 2), r * std::sin(t)};
      const double rr = r * std::sqrt(uniform01(rng));
      return {rr * std::cos(t), pick < side + cap ? h / 2 : -h / 2, rr * std::sin(t)};
    }
    case Shape::kCone: {
      const double r = 1.0, h = p;
      const double slant = std::sqrt(r * r + h * h);
      const double lateral = kPi * r * slant, base = kPi * r * r;
      const double t = uniform(rng, 0, 2 * kPi);
      if (uniform01(rng) * (lateral + base) < lateral) {
        // Radius from the apex grows linearly; area density is linear in it.
        const double s = std::sqrt(uniform01(rng));
        return {s * r * std::cos(t), h / 2 - s * h, s * r * std::sin(t)};
      }
      const double rr = r * std::sqrt(uniform01(rng));
      return {rr * std::cos(t), -h / 2, rr * std::sin(t)};
    }
    case Shape::kTorus: {
      const double big = 1.0, tube = p;
      // Rejection on the tube angle gives uniform area density.
      for (;;) {
        const double u = uniform(rng, 0, 2 * kPi), v = uniform(rng, 0, 2 * kPi);
        if (uniform01(rng) * (big + tube) <= big + tube * std::cos(v)) {
          const double ring = big + tube * std::cos(v);
          return {ring * std::cos(u), tube * std::sin(v), ring * std::sin(u)};
        }
      }
    }
  }
  return Eigen::Vector3d::Zero();
}

Eigen::Matrix3d random_rotation(Rng& rng, bool tilt) {
  if (!tilt) {
    const double a = uniform(rng, 0, 2 * kPi);
    Eigen::Matrix3d r;
    r << std::cos(a), 0, std::sin(a), 0, 1, 0, -std::sin(a), 0, std::cos(a);
    return r;
  }
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::Quaterniond q(g(rng), g(rng), g(rng), g(rng));
  q.normalize();
  return q.toRotationMatrix();
}

}  // namespace

std::vector<LabeledInstance> generate_toy(const ToyParams& params) {
  static const char* kNames[5] = {"sphere", "cube", "cylinder", "cone", "torus"};
  std::vector<LabeledInstance> out;
  out.reserve(10 * params.instances_per_class);
  std::normal_distribution<double> noise(0.0, params.noise_sigma);
  for (int split = 0; split < 2; ++split) {
    for (int s = 0; s < 5; ++s) {
      const Range range = split == 0 ? kRanges[s].a : kRanges[s].b;
      const std::string label = std::string(kNames[s]) + (split == 0 ? "_a" : "_b");
      for (std::size_t i = 0; i < params.instances_per_class; ++i) {
        Rng rng(derive_seed(params.seed, fnv1a(label), i));
        const double p = uniform(rng, range.lo, range.hi);
        // Sphere and cube use a second independent ratio from the same range.
        const double q = uniform(rng, range.lo, range.hi);
        const Eigen::Matrix3d rot = random_rotation(rng, params.random_tilt);
        LabeledInstance inst;
        inst.label = label;
        inst.source_id = "toy/" + label + "/" + std::to_string(i);
        inst.cloud.points.resize(static_cast<Eigen::Index>(params.points_per_instance), 3);
        for (std::size_t k = 0; k < params.points_per_instance; ++k) {
          Eigen::Vector3d v;
          if (uniform01(rng) < params.outlier_fraction) {
            v = Eigen::Vector3d(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1)) * 1.5;
          } else {
            v = rot * sample_shape(static_cast<Shape>(s), p, q, rng);
            if (params.noise_sigma > 0) v += Eigen::Vector3d(noise(rng), noise(rng), noise(rng));
          }
          inst.cloud.points.row(static_cast<Eigen::Index>(k)) = v.cast<float>().transpose();
        }
        normalize_unit_sphere(inst.cloud);
        out.push_back(std::move(inst));
      }
    }
  }
  return out;
}

}  // namespace pcfsl
