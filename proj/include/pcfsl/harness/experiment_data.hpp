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

#include "pcfsl/harness/config.hpp"

namespace pcfsl {

/// Instances and episode pools for one run. Training and validation pools
/// share the training classes but not instances; the test pool holds the
/// held-out classes only.
struct ExperimentData {
  BenchmarkSplit split;
  std::vector<LabeledInstance> train;
  std::vector<LabeledInstance> test;
  ClassPool train_pool;
  ClassPool val_pool;
  ClassPool test_pool;
};

/// Partitions already-loaded instances per the configured benchmark, fold and
/// validation subset.
ExperimentData assemble_data(std::vector<LabeledInstance> instances, const ExperimentConfig& cfg);

/// Reads the prepared cache (kNotFound when absent). The synthetic benchmark
/// is generated from cfg.toy when no cache exists.
ExperimentData load_experiment_data(const ExperimentConfig& cfg);

/// Samples `points` points from every episode instance (augmenting when
/// requested) and stacks them class-major, support first.
EpisodeBatch make_batch(const std::vector<LabeledInstance>& instances, const Episode& episode, int points,
                        const AugmentParams* augment, Rng& rng);

}  // namespace pcfsl
