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

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "pcfsl/harness/experiment_data.hpp"

namespace pcfsl {

/// Tracks the best validation accuracy; signals a stop once `patience`
/// epochs pass without a strict improvement.
class EarlyStopping {
 public:
  explicit EarlyStopping(int patience) : patience_(patience) {}

  /// Returns true when `epoch` (1-based) improved on the best so far.
  bool update(int epoch, double val_accuracy);
  bool should_stop(int epoch) const { return epoch - best_epoch_ >= patience_; }
  int best_epoch() const { return best_epoch_; }
  double best() const { return best_; }

 private:
  int patience_;
  int best_epoch_ = 0;
  double best_ = -1.0;
};

struct EpochLog {
  int epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;  // percent
  double val_accuracy = 0.0;    // percent
  double val_ci95 = 0.0;
  double seconds = 0.0;
};

struct TrainResult {
  std::vector<EpochLog> epochs;
  /// Loss of every training episode, in order.
  std::vector<double> episode_losses;
  int best_epoch = 0;
  double best_val_accuracy = 0.0;
  bool early_stopped = false;
  std::filesystem::path best_checkpoint;
  std::filesystem::path last_checkpoint;
  std::filesystem::path log_path;
  /// One row per optimizer step: step, epoch, episode, episode seed, loss.
  std::filesystem::path episode_log_path;
};

using TrainLogger = std::function<void(const EpochLog&)>;

/// Episodic training: per epoch cfg.train_episodes optimizer steps (one per
/// episode) then cfg.val_episodes fixed validation episodes. Writes
/// best.ckpt, last.ckpt, train_log.csv, episode_losses.csv and config.txt
/// into cfg.out_dir.
/// A non-finite loss aborts with ErrorCode::kNumeric naming the episode seed.
TrainResult train(const ExperimentConfig& cfg, const ExperimentData& data, const TrainLogger& logger = {});

}  // namespace pcfsl
