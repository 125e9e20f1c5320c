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

#include "pcfsl/harness/evaluator.hpp"
#include "pcfsl/harness/trainer.hpp"

namespace pcfsl {

struct FoldOutcome {
  int fold = 0;      // ScanObjectNN-FS split, or validation subset otherwise
  EvalReport best;   // best-validation checkpoint
  EvalReport last;   // last-epoch checkpoint
};

struct CrossValidationReport {
  std::vector<FoldOutcome> folds;
  double best_mean = 0.0;  // average over folds, percent
  double last_mean = 0.0;
  /// "best" or "last", whichever average is higher.
  std::string chosen;
  double chosen_mean = 0.0;
};

/// The benchmark's fold scheme: folds of the held-out split for
/// ScanObjectNN-FS (fold = 0, 1, 2), the five validation subsets of the
/// training data otherwise. cfg.cv_folds > 0 limits the number of folds.
/// Each fold trains into <out_dir>/fold<i> and evaluates both checkpoints.
CrossValidationReport cross_validate(const ExperimentConfig& cfg, const TrainLogger& logger = {});

/// Chooses between the best-validation and last-epoch averages.
void choose(CrossValidationReport& report);

/// One row per fold plus the averages.
std::string format_cross_validation(const CrossValidationReport& report);

}  // namespace pcfsl
