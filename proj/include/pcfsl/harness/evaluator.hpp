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
#include <vector>

#include "pcfsl/harness/experiment_data.hpp"

namespace pcfsl {

struct EvalReport {
  /// Fraction of correct queries per episode, in episode order.
  std::vector<double> accuracies;
  /// Percent.
  double mean = 0.0;
  /// Percent: 1.96 * sample std / sqrt(episodes).
  double ci95 = 0.0;
  std::string fingerprint;
  std::string benchmark;
  std::string label;  // e.g. "best" or "last"
  int fold = 0;
  std::uint64_t seed = 0;
  double wall_seconds = 0.0;
  double mean_episode_ms = 0.0;
  /// Module toggles the report was produced with.
  bool spf = false, sci = false, cif = false;
};

/// Fills mean and ci95 from per-episode accuracies.
void summarize(EvalReport& report);
/// 1.96 * sample standard deviation / sqrt(n), in the units of `values`; 0 for n < 2.
double ci95_half_width(const std::vector<double>& values);

/// Anything that classifies the queries of an episode batch.
class EpisodePredictor {
 public:
  virtual ~EpisodePredictor() = default;
  virtual std::vector<int> predict(const EpisodeBatch& batch) = 0;
};

/// Runs the model in evaluation mode.
class ModelPredictor : public EpisodePredictor {
 public:
  explicit ModelPredictor(FewShotModel& model) : model_(model) {}
  std::vector<int> predict(const EpisodeBatch& batch) override;

 private:
  FewShotModel& model_;
};

/// Evaluates `episodes` episodes drawn from `pool` with per-episode seeds
/// derived from `seed`, so a given seed always yields the same episodes.
EvalReport evaluate_predictor(EpisodePredictor& predictor, const std::vector<LabeledInstance>& instances,
                              const ClassPool& pool, const EpisodeSpec& spec, int episodes, int points,
                              std::uint64_t seed);

/// Loads the checkpoint, checks it against the config and evaluates
/// cfg.test_episodes test episodes with cfg.eval_seed.
EvalReport evaluate_checkpoint(const std::filesystem::path& checkpoint, const ExperimentConfig& cfg,
                               const ExperimentData& data);

/// <path> gets "episode,accuracy" rows; <path>.json gets the metadata.
void write_report(const EvalReport& report, const std::filesystem::path& csv_path);
EvalReport read_report(const std::filesystem::path& csv_path);

}  // namespace pcfsl
