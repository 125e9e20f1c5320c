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

#include "pcfsl/data/episode.hpp"

#include <algorithm>
#include <map>
#include <numeric>

namespace pcfsl {

void EpisodeSpec::validate() const {
  require(n_way >= 2, ErrorCode::kConfig, "episode: n_way must be >= 2");
  require(k_shot >= 1, ErrorCode::kConfig, "episode: k_shot must be >= 1");
  require(q_query >= 1, ErrorCode::kConfig, "episode: q_query must be >= 1");
}

ClassPool make_pool(const std::vector<LabeledInstance>& instances, const std::vector<std::size_t>* subset) {
  std::map<std::string, std::vector<std::size_t>> grouped;
  if (subset) {
    for (std::size_t i : *subset) grouped[instances.at(i).label].push_back(i);
  } else {
    for (std::size_t i = 0; i < instances.size(); ++i) grouped[instances[i].label].push_back(i);
  }
  ClassPool pool;
  for (auto& [name, idx] : grouped) {
    pool.classes.push_back(name);
    pool.members.push_back(std::move(idx));
  }
  return pool;
}

Episode sample_episode(const ClassPool& pool, const EpisodeSpec& spec, Rng& rng) {
  spec.validate();
  const std::size_t n_way = static_cast<std::size_t>(spec.n_way);
  const std::size_t per_class = static_cast<std::size_t>(spec.k_shot + spec.q_query);
  if (pool.class_count() < n_way)
    fail(ErrorCode::kConfig, "episode: pool has " + std::to_string(pool.class_count()) + " classes, need " +
                                 std::to_string(n_way));

  std::vector<std::size_t> chosen;
  std::vector<bool> tried(pool.class_count(), false);
  const std::size_t max_draws = n_way * 10;
  std::size_t draws = 0;
  while (chosen.size() < n_way) {
    if (draws == max_draws)
      fail(ErrorCode::kConfig, "episode: could not find " + std::to_string(n_way) + " classes with >= " +
                                   std::to_string(per_class) + " instances after " + std::to_string(max_draws) +
                                   " draws");
    ++draws;
    const std::size_t c = uniform_index(rng, pool.class_count());
    if (tried[c]) continue;
    tried[c] = true;
    if (pool.members[c].size() >= per_class) chosen.push_back(c);
  }

  Episode ep;
  for (std::size_t label = 0; label < n_way; ++label) {
    const auto& members = pool.members[chosen[label]];
    std::vector<std::size_t> perm(members.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t i = 0; i < per_class; ++i) std::swap(perm[i], perm[i + uniform_index(rng, perm.size() - i)]);
    ep.class_map.push_back(pool.classes[chosen[label]]);
    for (std::size_t i = 0; i < per_class; ++i) {
      const bool support = i < static_cast<std::size_t>(spec.k_shot);
      (support ? ep.support : ep.query).push_back(members[perm[i]]);
      (support ? ep.support_labels : ep.query_labels).push_back(static_cast<int>(label));
    }
  }
  return ep;
}

}  // namespace pcfsl
