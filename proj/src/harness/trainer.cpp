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

#include "pcfsl/harness/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>

#include "pcfsl/harness/checkpoint.hpp"
#include "pcfsl/harness/evaluator.hpp"
#include "pcfsl/nn/adam.hpp"

namespace pcfsl {

bool EarlyStopping::update(int epoch, double val_accuracy) {
  if (val_accuracy > best_) {
    best_ = val_accuracy;
    best_epoch_ = epoch;
    return true;
  }
  return false;
}

namespace {

void dump_episode(const std::filesystem::path& path, std::uint64_t seed, int epoch, int index, const Episode& ep,
                  const std::vector<LabeledInstance>& instances) {
  std::ofstream out(path, std::ios::trunc);
  out << "episode_seed " << seed << "\nepoch " << epoch << "\nindex " << index << "\nclasses";
  for (const auto& c : ep.class_map) out << ' ' << c;
  out << "\nsupport";
  for (auto i : ep.support) out << ' ' << instances[i].source_id;
  out << "\nquery";
  for (auto i : ep.query) out << ' ' << instances[i].source_id;
  out << '\n';
}

}  // namespace

TrainResult train(const ExperimentConfig& cfg, const ExperimentData& data, const TrainLogger& logger) {
  cfg.validate();
  const std::filesystem::path out_dir(cfg.out_dir);
  std::filesystem::create_directories(out_dir);
  save_config(cfg, out_dir / "config.txt");

  const std::uint64_t master = effective_seed(cfg);
  FewShotModel model(cfg.model, master);
  AdamOptions opt;
  opt.lr = cfg.lr;
  Adam adam(model.params().trainable(), opt);
  const std::set<std::string> test_classes(data.split.test_classes.begin(), data.split.test_classes.end());

  TrainResult result;
  result.best_checkpoint = out_dir / "best.ckpt";
  result.last_checkpoint = out_dir / "last.ckpt";
  result.log_path = out_dir / "train_log.csv";
  std::ofstream log(result.log_path, std::ios::trunc);
  log << "epoch,lr,train_loss,train_accuracy,val_accuracy,val_ci95,seconds\n" << std::setprecision(10);
  result.episode_log_path = out_dir / "episode_losses.csv";
  std::ofstream episode_log(result.episode_log_path, std::ios::trunc);
  episode_log << "step,epoch,episode,seed,loss\n" << std::setprecision(10);

  EarlyStopping stopper(cfg.patience);
  const std::uint64_t val_seed = derive_seed(master, seed_tag::kValEpisodes);
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    EpochLog entry;
    entry.epoch = epoch;
    entry.lr = step_decay_lr(cfg.lr, cfg.lr_gamma, cfg.lr_step_epochs, epoch - 1);
    adam.set_lr(entry.lr);

    double loss_sum = 0.0, acc_sum = 0.0;
    for (int e = 0; e < cfg.train_episodes; ++e) {
      const std::uint64_t ep_seed = derive_seed(
          master, seed_tag::kTrainEpisodes,
          static_cast<std::uint64_t>(epoch - 1) * static_cast<std::uint64_t>(cfg.train_episodes) + e);
      Rng rng(ep_seed);
      const Episode episode = sample_episode(data.train_pool, cfg.episode, rng);
      for (const auto& c : episode.class_map)
        if (test_classes.count(c)) fail(ErrorCode::kInternal, "training episode contains test class " + c);
      Rng aug_rng(derive_seed(ep_seed, seed_tag::kAugment));
      const EpisodeBatch batch =
          make_batch(data.train, episode, cfg.points, cfg.augment ? &cfg.augment_params : nullptr, aug_rng);
      model.params().zero_grad();
      StepResult step;
      try {
        step = model.train_step(batch);
      } catch (const Error& err) {
        if (err.code() != ErrorCode::kNumeric) throw;
        dump_episode(out_dir / "nonfinite_episode.txt", ep_seed, epoch, e, episode, data.train);
        fail(ErrorCode::kNumeric, "non-finite loss at epoch " + std::to_string(epoch) + ", episode " +
                                      std::to_string(e) + " (episode seed " + std::to_string(ep_seed) + ")");
      }
      adam.step();
      result.episode_losses.push_back(step.loss);
      episode_log << result.episode_losses.size() << ',' << epoch << ',' << e << ',' << ep_seed << ',' << step.loss << '\n';
      loss_sum += step.loss;
      acc_sum += step.accuracy;
    }
    entry.train_loss = loss_sum / cfg.train_episodes;
    entry.train_accuracy = 100.0 * acc_sum / cfg.train_episodes;

    ModelPredictor predictor(model);
    const EvalReport val =
        evaluate_predictor(predictor, data.train, data.val_pool, cfg.episode, cfg.val_episodes, cfg.points, val_seed);
    entry.val_accuracy = val.mean;
    entry.val_ci95 = val.ci95;
    entry.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    if (stopper.update(epoch, entry.val_accuracy))
      save_checkpoint(snapshot(model, cfg, epoch, entry.val_accuracy), result.best_checkpoint);
    save_checkpoint(snapshot(model, cfg, epoch, entry.val_accuracy), result.last_checkpoint);
    log << entry.epoch << ',' << entry.lr << ',' << entry.train_loss << ',' << entry.train_accuracy << ','
        << entry.val_accuracy << ',' << entry.val_ci95 << ',' << entry.seconds << '\n';
    log.flush();
    episode_log.flush();
    result.epochs.push_back(entry);
    if (logger) logger(entry);
    if (stopper.should_stop(epoch)) {
      result.early_stopped = epoch < cfg.epochs;
      break;
    }
  }
  result.best_epoch = stopper.best_epoch();
  result.best_val_accuracy = stopper.best();
  return result;
}

}  // namespace pcfsl
