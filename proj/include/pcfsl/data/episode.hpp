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

#include <string>
#include <vector>

#include "pcfsl/data/point_cloud.hpp"
#include "pcfsl/rng.hpp"

namespace pcfsl {

struct EpisodeSpec {
  int n_way = 5;
  int k_shot = 1;
  int q_query = 15;

  int support_size() const { return n_way * k_shot; }
  int query_size() const { return n_way * q_query; }
  void validate() const;
};

/// Instance indices grouped by class.
struct ClassPool {
  std::vector<std::string> classes;
  std::vector<std::vector<std::size_t>> members;

  std::size_t class_count() const { return classes.size(); }
};

/// Groups `instances` by label (classes sorted by name). When `subset` is
/// given, only those indices are pooled.
ClassPool make_pool(const std::vector<LabeledInstance>& instances, const std::vector<std::size_t>* subset = nullptr);

/// One N-way K-shot Q-query task. Indices refer to the pooled instance
/// vector; support and query are ordered class-major.
struct Episode {
  std::vector<std::size_t> support;
  std::vector<std::size_t> query;
  std::vector<int> support_labels;
  std::vector<int> query_labels;
  /// Episode class index -> class name.
  std::vector<std::string> class_map;
};

/// Samples N classes without replacement, then K+Q instances per class
/// without replacement. Classes with fewer than K+Q instances are redrawn;
/// after N*10 draws without completing the episode it fails with a
/// configuration error.
Episode sample_episode(const ClassPool& pool, const EpisodeSpec& spec, Rng& rng);

}  // namespace pcfsl
