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

#include "pcfsl/harness/evaluator.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

#include "pcfsl/harness/checkpoint.hpp"

namespace pcfsl {

double ci95_half_width(const std::vector<double>& values) {
  const std::size_t n = values.size();
  if (n < 2) return 0.0;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return 1.96 * std::sqrt(ss / static_cast<double>(n - 1)) / std::sqrt(static_cast<double>(n));
}

void summarize(EvalReport& report) {
  double sum = 0.0;
  for (double v : report.accuracies) sum += v;
  report.mean = report.accuracies.empty() ? 0.0 : 100.0 * sum / static_cast<double>(report.accuracies.size());
  report.ci95 = 100.0 * ci95_half_width(report.accuracies);
}

std::vector<int> ModelPredictor::predict(const EpisodeBatch& batch) {
  return pcfsl::predict(model_.forward(batch, Mode::kEval).logits);
}

EvalReport evaluate_predictor(EpisodePredictor& predictor, const std::vector<LabeledInstance>& instances,
                              const ClassPool& pool, const EpisodeSpec& spec, int episodes, int points,
                              std::uint64_t seed) {
  EvalReport report;
  report.seed = seed;
  const auto start = std::chrono::steady_clock::now();
  report.accuracies.reserve(static_cast<std::size_t>(episodes));
  for (int e = 0; e < episodes; ++e) {
    Rng rng(derive_seed(seed, seed_tag::kTestEpisodes, static_cast<std::uint64_t>(e)));
    const Episode episode = sample_episode(pool, spec, rng);
    const EpisodeBatch batch = make_batch(instances, episode, points, nullptr, rng);
    const std::vector<int> pred = predictor.predict(batch);
    require(pred.size() == batch.query_labels.size(), ErrorCode::kInternal, "predictor returned wrong count");
    int correct = 0;
    for (std::size_t j = 0; j < pred.size(); ++j) correct += pred[j] == batch.query_labels[j];
    report.accuracies.push_back(static_cast<double>(correct) / static_cast<double>(pred.size()));
  }
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  report.mean_episode_ms = episodes > 0 ? 1000.0 * report.wall_seconds / episodes : 0.0;
  summarize(report);
  return report;
}

EvalReport evaluate_checkpoint(const std::filesystem::path& checkpoint, const ExperimentConfig& cfg,
                               const ExperimentData& data) {
  const Checkpoint ckpt = load_checkpoint(checkpoint);
  check_compatible(ckpt, cfg);
  FewShotModel model(cfg.model, cfg.seed);
  restore(model, ckpt);
  ModelPredictor predictor(model);
  EvalReport report = evaluate_predictor(predictor, data.test, data.test_pool, cfg.episode, cfg.test_episodes,
                                         cfg.points, cfg.eval_seed);
  report.fingerprint = ckpt.config_fingerprint;
  report.benchmark = std::string(benchmark_name(cfg.benchmark));
  report.fold = cfg.fold;
  report.label = checkpoint.stem().string();
  report.spf = cfg.model.spf_enabled;
  report.sci = cfg.model.sci_enabled;
  report.cif = cfg.model.cif_enabled;
  return report;
}

void write_report(const EvalReport& report, const std::filesystem::path& csv_path) {
  if (csv_path.has_parent_path()) std::filesystem::create_directories(csv_path.parent_path());
  {
    std::ofstream out(csv_path, std::ios::trunc);
    if (!out) fail(ErrorCode::kIo, "cannot write " + csv_path.string());
    out << "episode,accuracy\n" << std::setprecision(17);
    for (std::size_t i = 0; i < report.accuracies.size(); ++i) out << i << ',' << report.accuracies[i] << '\n';
  }
  nlohmann::json meta = {
      {"episodes", report.accuracies.size()},
      {"mean_accuracy", report.mean},
      {"ci95", report.ci95},
      {"fingerprint", report.fingerprint},
      {"benchmark", report.benchmark},
      {"label", report.label},
      {"fold", report.fold},
      {"seed", report.seed},
      {"wall_seconds", report.wall_seconds},
      {"mean_episode_ms", report.mean_episode_ms},
      {"modules", {{"spf", report.spf}, {"sci", report.sci}, {"cif", report.cif}}},
  };
  std::ofstream side(csv_path.string() + ".json", std::ios::trunc);
  if (!side) fail(ErrorCode::kIo, "cannot write " + csv_path.string() + ".json");
  side << std::setw(2) << meta << '\n';
}

EvalReport read_report(const std::filesystem::path& csv_path) {
  std::ifstream in(csv_path);
  if (!in) fail(ErrorCode::kNotFound, "report not found: " + csv_path.string());
  EvalReport report;
  std::string line;
  if (!std::getline(in, line) || line != "episode,accuracy") fail(ErrorCode::kFormat, csv_path.string() + ": bad header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) fail(ErrorCode::kFormat, csv_path.string() + ": bad row");
    report.accuracies.push_back(std::stod(line.substr(comma + 1)));
  }
  std::ifstream side(csv_path.string() + ".json");
  if (side) {
    nlohmann::json meta;
    try {
      side >> meta;
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::kFormat, csv_path.string() + ".json: " + e.what());
    }
    report.fingerprint = meta.value("fingerprint", "");
    report.benchmark = meta.value("benchmark", "");
    report.label = meta.value("label", "");
    report.fold = meta.value("fold", 0);
    report.seed = meta.value("seed", std::uint64_t{0});
    report.wall_seconds = meta.value("wall_seconds", 0.0);
    report.mean_episode_ms = meta.value("mean_episode_ms", 0.0);
    if (meta.contains("modules")) {
      report.spf = meta["modules"].value("spf", false);
      report.sci = meta["modules"].value("sci", false);
      report.cif = meta["modules"].value("cif", false);
    }
  }
  summarize(report);
  return report;
}

}  // namespace pcfsl
