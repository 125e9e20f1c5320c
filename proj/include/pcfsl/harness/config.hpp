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
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "pcfsl/data/benchmark.hpp"
#include "pcfsl/data/episode.hpp"
#include "pcfsl/data/sampling.hpp"
#include "pcfsl/data/toy.hpp"
#include "pcfsl/model/few_shot_model.hpp"

namespace pcfsl {

/// Everything needed to reproduce a run. Serialized as flat "key = value"
/// lines; see config_keys() for the schema.
struct ExperimentConfig {
  Benchmark benchmark = Benchmark::kModelNet40FS;
  /// Held-out split for ScanObjectNN-FS (0..2); ignored elsewhere.
  int fold = 0;
  /// Which of the five training-data subsets validates (0..4).
  int val_fold = 0;
  EpisodeSpec episode;
  /// Points sampled from every instance per episode.
  int points = 512;
  ModelOptions model;
  bool augment = true;
  AugmentParams augment_params;

  double lr = 8e-4;
  double lr_gamma = 0.5;
  int lr_step_epochs = 20;
  int epochs = 80;
  int train_episodes = 400;
  int val_episodes = 600;
  int test_episodes = 700;
  int patience = 30;
  /// Number of cross-validation folds to run (0 = the benchmark's full scheme).
  int cv_folds = 0;

  std::uint64_t seed = 1;
  std::uint64_t eval_seed = 20240607;
  /// When false the master seed is mixed with a nondeterministic source.
  bool deterministic = true;

  std::string cache_dir = "cache";
  std::string out_dir = "runs/default";
  /// Synthetic benchmark parameters (used when benchmark = Toy-FS).
  ToyParams toy;

  void validate() const;
};

struct ConfigKey {
  std::string name;
  std::string description;
};

/// Every recognized key, in serialization order.
const std::vector<ConfigKey>& config_keys();

/// Sets one key; throws kConfig for unknown keys or unparsable values.
void set_config_value(ExperimentConfig& cfg, std::string_view key, std::string_view value);
std::string get_config_value(const ExperimentConfig& cfg, std::string_view key);

/// Parses "key = value" lines and validates the result; '#' starts a comment.
/// Unset keys keep defaults.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string to_text(const ExperimentConfig& cfg);
void save_config(const ExperimentConfig& cfg, const std::filesystem::path& path);

/// Applies a "key=value" override.
void apply_override(ExperimentConfig& cfg, std::string_view assignment);

/// Hex FNV-1a over the serialized settings that affect results (paths are
/// excluded).
std::string fingerprint(const ExperimentConfig& cfg);

/// Cache directory for the configured benchmark: $PCIA_CACHE when set,
/// otherwise cfg.cache_dir, joined with the benchmark name.
std::filesystem::path resolve_cache_dir(const ExperimentConfig& cfg);

/// The master seed actually used (cfg.seed, or a mixed seed when not deterministic).
std::uint64_t effective_seed(const ExperimentConfig& cfg);

/// A small configuration for the synthetic benchmark that trains on one CPU
/// core in minutes.
ExperimentConfig toy_config();

}  // namespace pcfsl
