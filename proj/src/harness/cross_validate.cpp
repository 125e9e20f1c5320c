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

#include "pcfsl/harness/cross_validate.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

namespace pcfsl {

void choose(CrossValidationReport& report) {
  double b = 0.0, l = 0.0;
  for (const auto& f : report.folds) {
    b += f.best.mean;
    l += f.last.mean;
  }
  const double n = report.folds.empty() ? 1.0 : static_cast<double>(report.folds.size());
  report.best_mean = b / n;
  report.last_mean = l / n;
  report.chosen = report.best_mean >= report.last_mean ? "best" : "last";
  report.chosen_mean = std::max(report.best_mean, report.last_mean);
}

CrossValidationReport cross_validate(const ExperimentConfig& cfg, const TrainLogger& logger) {
  const bool rotate_split = cfg.benchmark == Benchmark::kScanObjectNNFS;
  int folds = fold_count(cfg.benchmark);
  if (cfg.cv_folds > 0) folds = std::min(folds, cfg.cv_folds);

  CrossValidationReport report;
  for (int f = 0; f < folds; ++f) {
    ExperimentConfig fc = cfg;
    if (rotate_split) {
      fc.fold = f;
    } else {
      fc.val_fold = f;
    }
    fc.out_dir = (std::filesystem::path(cfg.out_dir) / ("fold" + std::to_string(f))).string();
    const ExperimentData data = load_experiment_data(fc);
    const TrainResult tr = train(fc, data, logger);
    FoldOutcome outcome;
    outcome.fold = f;
    outcome.best = evaluate_checkpoint(tr.best_checkpoint, fc, data);
    outcome.last = evaluate_checkpoint(tr.last_checkpoint, fc, data);
    write_report(outcome.best, std::filesystem::path(fc.out_dir) / "best.eval.csv");
    write_report(outcome.last, std::filesystem::path(fc.out_dir) / "last.eval.csv");
    report.folds.push_back(std::move(outcome));
  }
  choose(report);
  std::ofstream out(std::filesystem::path(cfg.out_dir) / "cv_summary.txt", std::ios::trunc);
  out << format_cross_validation(report);
  return report;
}

std::string format_cross_validation(const CrossValidationReport& report) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << "fold  best-val            last-epoch\n";
  for (const auto& f : report.folds)
    os << std::setw(4) << f.fold << "  " << std::setw(6) << f.best.mean << " +- " << std::setw(5) << f.best.ci95
       << "     " << std::setw(6) << f.last.mean << " +- " << std::setw(5) << f.last.ci95 << '\n';
  os << "mean  " << std::setw(6) << report.best_mean << "              " << std::setw(6) << report.last_mean << '\n';
  os << "chosen: " << report.chosen << " (" << report.chosen_mean << ")\n";
  return os.str();
}

}  // namespace pcfsl
