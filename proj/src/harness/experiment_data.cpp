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

#include "pcfsl/harness/experiment_data.hpp"

#include <algorithm>

#include "pcfsl/data/cache.hpp"

namespace pcfsl {

ExperimentData assemble_data(std::vector<LabeledInstance> instances, const ExperimentConfig& cfg) {
  PartitionedInstances part = build_split(std::move(instances), cfg.benchmark, cfg.fold);
  ExperimentData data;
  data.split = part.split;
  data.train = std::move(part.train);
  data.test = std::move(part.test);
  if (data.train.empty() || data.test.empty())
    fail(ErrorCode::kConfig, "no instances for the " + std::string(benchmark_name(cfg.benchmark)) + " split");

  const auto folds = partition_folds(data.train, 5, derive_seed(cfg.seed, seed_tag::kFolds));
  const auto& val = folds[static_cast<std::size_t>(cfg.val_fold)];
  std::vector<std::size_t> fit;
  fit.reserve(data.train.size());
  for (std::size_t i = 0; i < data.train.size(); ++i)
    if (!std::binary_search(val.begin(), val.end(), i)) fit.push_back(i);
  data.train_pool = make_pool(data.train, &fit);
  data.val_pool = make_pool(data.train, &val);
  data.test_pool = make_pool(data.test);
  return data;
}

ExperimentData load_experiment_data(const ExperimentConfig& cfg) {
  const auto dir = resolve_cache_dir(cfg);
  if (cfg.benchmark == Benchmark::kToy && !std::filesystem::exists(dir / "index.tsv"))
    return assemble_data(generate_toy(cfg.toy), cfg);
  CacheContents cache = read_cache(dir);
  if (cache.benchmark != cfg.benchmark)
    fail(ErrorCode::kConfig, "cache at " + dir.string() + " holds " + std::string(benchmark_name(cache.benchmark)));
  return assemble_data(std::move(cache.instances), cfg);
}

EpisodeBatch make_batch(const std::vector<LabeledInstance>& instances, const Episode& episode, int points,
                        const AugmentParams* augment, Rng& rng) {
  EpisodeBatch batch;
  batch.points = points;
  batch.support_clouds = static_cast<int>(episode.support.size());
  batch.query_clouds = static_cast<int>(episode.query.size());
  batch.query_labels = episode.query_labels;
  batch.xyz.resize(static_cast<Eigen::Index>(batch.support_clouds + batch.query_clouds) * points, 3);
  Eigen::Index row = 0;
  auto add = [&](std::size_t idx) {
    PointCloud cloud = sample_points(instances[idx].cloud, static_cast<std::size_t>(points), rng);
    if (augment) cloud = pcfsl::augment(cloud, *augment, rng);
    batch.xyz.middleRows(row, points) = to_matrix(cloud);
    row += points;
  };
  for (std::size_t idx : episode.support) add(idx);
  for (std::size_t idx : episode.query) add(idx);
  return batch;
}

}  // namespace pcfsl
