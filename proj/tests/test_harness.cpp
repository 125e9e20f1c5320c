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

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>

#include "pcfsl/data/toy.hpp"
#include "pcfsl/harness/checkpoint.hpp"
#include "pcfsl/harness/config.hpp"
#include "pcfsl/harness/cross_validate.hpp"
#include "pcfsl/harness/evaluator.hpp"
#include "pcfsl/harness/experiment_data.hpp"
#include "pcfsl/harness/report.hpp"
#include "pcfsl/harness/trainer.hpp"
#include "test_util.hpp"

namespace pcfsl {
namespace {

using test::TempDir;

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return static_cast<ErrorCode>(0);
}

ExperimentConfig tiny_config(const std::filesystem::path& out) {
  ExperimentConfig cfg = toy_config();
  cfg.points = 32;
  cfg.model.backbone.k = 4;
  cfg.model.backbone.edge_widths = {8, 8};
  cfg.model.backbone.embed_dim = 16;
  cfg.model.spf.k_s = 4;
  cfg.model.spf.k = 4;
  cfg.model.sci.h_r = 4;
  cfg.model.cif.h = 4;
  cfg.episode = {5, 1, 3};
  cfg.epochs = 5;
  cfg.train_episodes = 3;
  cfg.val_episodes = 2;
  cfg.test_episodes = 4;
  cfg.toy.instances_per_class = 20;
  cfg.toy.points_per_instance = 48;
  cfg.out_dir = out.string();
  return cfg;
}

// ---------------------------------------------------------------- config

TEST(Config, DefaultsFollowThePublishedProtocol) {
  const ExperimentConfig cfg;
  EXPECT_DOUBLE_EQ(cfg.lr, 8e-4);
  EXPECT_DOUBLE_EQ(cfg.lr_gamma, 0.5);
  EXPECT_EQ(cfg.lr_step_epochs, 20);
  EXPECT_EQ(cfg.epochs, 80);
  EXPECT_EQ(cfg.train_episodes, 400);
  EXPECT_EQ(cfg.val_episodes, 600);
  EXPECT_EQ(cfg.test_episodes, 700);
  EXPECT_EQ(cfg.patience, 30);
  EXPECT_EQ(cfg.points, 512);
  EXPECT_EQ(cfg.model.backbone.edge_widths, (std::vector<int>{64, 64, 128, 256}));
  EXPECT_EQ(cfg.model.backbone.embed_dim, 1024);
  EXPECT_NO_THROW(cfg.validate());
}

TEST(Config, TextRoundTripIsLossless) {
  ExperimentConfig cfg = toy_config();
  cfg.lr = 0.0012345678901234567;
  cfg.model.backbone.edge_widths = {3, 5, 7};
  cfg.model.metric = Metric::kCosine;
  cfg.seed = 0xFFFFFFFFFFFFFFFFull;
  cfg.out_dir = "some dir/with spaces";
  const ExperimentConfig back = parse_config(to_text(cfg));
  EXPECT_EQ(to_text(back), to_text(cfg));
  EXPECT_EQ(back.lr, cfg.lr);
  EXPECT_EQ(back.out_dir, cfg.out_dir);
  EXPECT_EQ(fingerprint(back), fingerprint(cfg));
}

TEST(Config, ParsesCommentsAndRejectsBadInput) {
  const ExperimentConfig cfg = parse_config("# header\nbenchmark = scanobjectnn  # inline\nfold=2\n\nk_shot = 5\n");
  EXPECT_EQ(cfg.benchmark, Benchmark::kScanObjectNNFS);
  EXPECT_EQ(cfg.fold, 2);
  EXPECT_EQ(cfg.episode.k_shot, 5);
  EXPECT_EQ(code_of([] { parse_config("no_such_key = 1\n"); }), ErrorCode::kConfig);
  EXPECT_EQ(code_of([] { parse_config("epochs = many\n"); }), ErrorCode::kConfig);
  EXPECT_EQ(code_of([] { parse_config("epochs = 0\n"); }), ErrorCode::kConfig);
  EXPECT_EQ(code_of([] { parse_config("fold = 3\nbenchmark = scanobjectnn\n"); }), ErrorCode::kConfig);
  EXPECT_EQ(code_of([] { parse_config("just words\n"); }), ErrorCode::kConfig);
}

TEST(Config, OverridesAndGetters) {
  ExperimentConfig cfg;
  apply_override(cfg, "cif.enabled=false");
  apply_override(cfg, "backbone = pointnet");
  EXPECT_FALSE(cfg.model.cif_enabled);
  EXPECT_EQ(cfg.model.backbone.variant, BackboneVariant::kPointNet);
  EXPECT_EQ(get_config_value(cfg, "cif.enabled"), "false");
  EXPECT_THROW(apply_override(cfg, "epochs"), Error);
  std::set<std::string> names;
  for (const auto& k : config_keys()) EXPECT_TRUE(names.insert(k.name).second) << k.name;
  EXPECT_TRUE(names.count("head.metric"));
  EXPECT_TRUE(names.count("head.tau_init"));
}

TEST(Config, FingerprintIgnoresPaths) {
  ExperimentConfig a, b;
  b.out_dir = "elsewhere";
  b.cache_dir = "/tmp/other";
  EXPECT_EQ(fingerprint(a), fingerprint(b));
  b.model.sci.h_r = 7;
  EXPECT_NE(fingerprint(a), fingerprint(b));
}

TEST(Config, CacheEnvironmentOverride) {
  ExperimentConfig cfg;
  cfg.cache_dir = "local";
  ::unsetenv("PCIA_CACHE");
  EXPECT_EQ(resolve_cache_dir(cfg), std::filesystem::path("local") / "ModelNet40-FS");
  ::setenv("PCIA_CACHE", "/data/cache", 1);
  EXPECT_EQ(resolve_cache_dir(cfg), std::filesystem::path("/data/cache") / "ModelNet40-FS");
  ::unsetenv("PCIA_CACHE");
}

TEST(Config, FileRoundTrip) {
  TempDir dir;
  const ExperimentConfig cfg = toy_config();
  save_config(cfg, dir / "c.txt");
  EXPECT_EQ(to_text(load_config(dir / "c.txt")), to_text(cfg));
  EXPECT_EQ(code_of([&] { load_config(dir / "missing.txt"); }), ErrorCode::kNotFound);
}

// ---------------------------------------------------------------- checkpoints

TEST(Checkpoint, RoundTripRestoresEveryTensor) {
  TempDir dir;
  const ExperimentConfig cfg = tiny_config(dir.path());
  FewShotModel a(cfg.model, 1), b(cfg.model, 2);
  const Checkpoint ck = snapshot(a, cfg, 3, 0.5);
  save_checkpoint(ck, dir / "m.ckpt");
  const Checkpoint back = load_checkpoint(dir / "m.ckpt");
  EXPECT_EQ(back.epoch, 3);
  EXPECT_EQ(back.val_accuracy, 0.5);
  EXPECT_EQ(back.config_fingerprint, fingerprint(cfg));
  EXPECT_EQ(back.param_hash, ck.param_hash);
  restore(b, back);
  for (std::size_t i = 0; i < a.params().entries().size(); ++i)
    EXPECT_EQ(a.params().entries()[i].second->value, b.params().entries()[i].second->value)
        << a.params().entries()[i].first;
}

TEST(Checkpoint, CorruptionIsDetected) {
  TempDir dir;
  const ExperimentConfig cfg = tiny_config(dir.path());
  FewShotModel m(cfg.model, 1);
  save_checkpoint(snapshot(m, cfg, 1, 0.0), dir / "m.ckpt");
  EXPECT_EQ(code_of([&] { load_checkpoint(dir / "none.ckpt"); }), ErrorCode::kNotFound);

  std::filesystem::copy_file(dir / "m.ckpt", dir / "flip.ckpt");
  const auto size = std::filesystem::file_size(dir / "flip.ckpt");
  {
    std::fstream f(dir / "flip.ckpt", std::ios::in | std::ios::out | std::ios::binary);
    f.seekg(static_cast<std::streamoff>(size - 3));
    char c = 0;
    f.read(&c, 1);
    c = static_cast<char>(c ^ 0x5a);
    f.seekp(static_cast<std::streamoff>(size - 3));
    f.write(&c, 1);
  }
  EXPECT_EQ(code_of([&] { load_checkpoint(dir / "flip.ckpt"); }), ErrorCode::kFormat);

  std::filesystem::copy_file(dir / "m.ckpt", dir / "cut.ckpt");
  std::filesystem::resize_file(dir / "cut.ckpt", size / 2);
  EXPECT_EQ(code_of([&] { load_checkpoint(dir / "cut.ckpt"); }), ErrorCode::kFormat);

  test::write_text(dir / "text.ckpt", "not a checkpoint at all");
  EXPECT_EQ(code_of([&] { load_checkpoint(dir / "text.ckpt"); }), ErrorCode::kFormat);
}

TEST(Checkpoint, MismatchedModelIsRejected) {
  TempDir dir;
  ExperimentConfig cfg = tiny_config(dir.path());
  FewShotModel m(cfg.model, 1);
  const Checkpoint ck = snapshot(m, cfg, 1, 0.0);
  ExperimentConfig other = cfg;
  other.model.backbone.variant = BackboneVariant::kPointNet;
  other.model.backbone.pointnet_widths = {8, 16};
  EXPECT_EQ(code_of([&] { check_compatible(ck, other); }), ErrorCode::kConfig);
  FewShotModel pn(other.model, 1);
  EXPECT_EQ(code_of([&] { restore(pn, ck); }), ErrorCode::kConfig);
  ExperimentConfig wider = cfg;
  wider.model.backbone.embed_dim = 32;
  FewShotModel w(wider.model, 1);
  EXPECT_EQ(code_of([&] { restore(w, ck); }), ErrorCode::kConfig);
  ExperimentConfig ten_way = cfg;
  ten_way.episode.n_way = ten_way.model.n_way = 10;
  EXPECT_EQ(code_of([&] { check_compatible(ck, ten_way); }), ErrorCode::kConfig);
}

// ---------------------------------------------------------------- evaluation

class ConstantPredictor : public EpisodePredictor {
 public:
  explicit ConstantPredictor(bool truth, std::uint64_t seed = 0) : truth_(truth), rng_(seed) {}
  std::vector<int> predict(const EpisodeBatch& batch) override {
    if (truth_) return batch.query_labels;
    std::uniform_int_distribution<int> d(0, batch.support_clouds - 1);
    std::vector<int> out(batch.query_labels.size());
    for (auto& v : out) v = d(rng_);
    return out;
  }

 private:
  bool truth_;
  Rng rng_;
};

struct ToyPool {
  std::vector<LabeledInstance> instances;
  ClassPool pool;
};

ToyPool toy_pool() {
  ToyParams p;
  p.instances_per_class = 20;
  p.points_per_instance = 32;
  ToyPool t{generate_toy(p), {}};
  t.pool = make_pool(t.instances);
  return t;
}

TEST(Evaluate, AllCorrectStub) {
  const ToyPool t = toy_pool();
  ConstantPredictor stub(true);
  const EvalReport r = evaluate_predictor(stub, t.instances, t.pool, {5, 1, 15}, 50, 16, 3);
  EXPECT_EQ(r.accuracies.size(), 50u);
  EXPECT_DOUBLE_EQ(r.mean, 100.0);
  EXPECT_DOUBLE_EQ(r.ci95, 0.0);
}

TEST(Evaluate, RandomStubSitsAtChance) {
  const ToyPool t = toy_pool();
  ConstantPredictor stub(false, 9);
  const EvalReport r = evaluate_predictor(stub, t.instances, t.pool, {5, 1, 15}, 300, 16, 4);
  EXPECT_GT(r.ci95, 0.0);
  EXPECT_LT(std::abs(r.mean - 20.0), 3.0 * r.ci95);
}

TEST(Evaluate, FixedSeedIsReproducible) {
  const ToyPool t = toy_pool();
  ConstantPredictor a(false, 1), b(false, 1);
  const EvalReport x = evaluate_predictor(a, t.instances, t.pool, {5, 1, 15}, 20, 16, 5);
  const EvalReport y = evaluate_predictor(b, t.instances, t.pool, {5, 1, 15}, 20, 16, 5);
  EXPECT_EQ(x.accuracies, y.accuracies);
}

TEST(Evaluate, ConfidenceIntervalArithmetic) {
  EvalReport r;
  r.accuracies.assign(350, 0.8);
  r.accuracies.insert(r.accuracies.end(), 350, 0.9);
  summarize(r);
  EXPECT_NEAR(r.mean, 85.0, 1e-9);
  // sample std = 0.05 * sqrt(700/699); half-width in percent = 9.8 / sqrt(699)
  EXPECT_NEAR(r.ci95, 9.8 / std::sqrt(699.0), 1e-9);
  EXPECT_NEAR(r.ci95, 0.37067004, 1e-8);
  EXPECT_EQ(ci95_half_width({0.5}), 0.0);
  double sum = 0, sq = 0;
  const std::vector<double> v = {0.1, 0.4, 0.4, 0.9, 1.0, 0.3};
  for (double x : v) sum += x;
  for (double x : v) sq += (x - sum / 6) * (x - sum / 6);
  EXPECT_NEAR(ci95_half_width(v), 1.96 * std::sqrt(sq / 5) / std::sqrt(6.0), 1e-12);
}

TEST(Evaluate, ReportFilesRoundTrip) {
  TempDir dir;
  EvalReport r;
  r.accuracies = {0.2, 1.0 / 3.0, 0.7333333333333333};
  r.fingerprint = "abc123";
  r.benchmark = "Toy-FS";
  r.label = "best";
  r.seed = 42;
  r.cif = true;
  summarize(r);
  write_report(r, dir / "r.eval.csv");
  EXPECT_TRUE(std::filesystem::exists(dir / "r.eval.csv.json"));
  const EvalReport back = read_report(dir / "r.eval.csv");
  EXPECT_EQ(back.accuracies, r.accuracies);
  EXPECT_EQ(back.mean, r.mean);
  EXPECT_EQ(back.ci95, r.ci95);
  EXPECT_EQ(back.fingerprint, "abc123");
  EXPECT_EQ(back.label, "best");
  EXPECT_TRUE(back.cif);
  EXPECT_FALSE(back.spf);
}

// ---------------------------------------------------------------- reports

EvalReport toggled(bool cif, double acc) {
  EvalReport r;
  r.accuracies = {acc, acc + 0.1, acc - 0.1};
  r.cif = cif;
  r.label = "best";
  summarize(r);
  return r;
}

TEST(Report, TwoReportsGiveATwoRowTable) {
  const auto rows = ablation_rows({toggled(true, 0.6), toggled(false, 0.5)});
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_FALSE(rows[0].cif);
  EXPECT_TRUE(rows[1].cif);
  const std::string table = format_ablation_table(rows);
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 3);  // header and two rows
}

TEST(Report, EmptyInputKeepsTheHeader) {
  const std::string table = format_ablation_table({});
  EXPECT_FALSE(table.empty());
  EXPECT_EQ(table.find("modules"), 0u);
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 1);
  EXPECT_TRUE(parse_ablation_csv(ablation_csv({})).empty());
  TempDir in, out;
  EXPECT_EQ(write_report_dir(in.path(), out.path()), 0u);
  EXPECT_TRUE(std::filesystem::exists(out / "ablation.txt"));
}

TEST(Report, CsvRoundTripIsExact) {
  const auto rows = ablation_rows({toggled(true, 0.61), toggled(false, 1.0 / 7.0)});
  const auto back = parse_ablation_csv(ablation_csv(rows));
  ASSERT_EQ(back.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(back[i].mean, rows[i].mean);
    EXPECT_EQ(back[i].ci95, rows[i].ci95);
    EXPECT_EQ(back[i].cif, rows[i].cif);
    EXPECT_EQ(back[i].episodes, rows[i].episodes);
  }
}

TEST(Report, PcaRecoversTheDominantAxis) {
  Matrix f(6, 3);
  f << -3, 0.1, 0, -2, -0.1, 0, -1, 0, 0.1, 1, 0.1, 0, 2, 0, -0.1, 3, -0.1, 0;
  const Matrix p = pca_project(f, 2);
  ASSERT_EQ(p.cols(), 2);
  for (int i = 0; i < 6; ++i) EXPECT_NEAR(std::abs(p(i, 0)), std::abs(f(i, 0)), 0.02);
  TempDir dir;
  const EmbeddingSet set{f, {"a", "a", "b", "b", "c", "c"}};
  write_embeddings_csv(set, dir / "embeddings.csv");
  const EmbeddingSet back = read_embeddings_csv(dir / "embeddings.csv");
  EXPECT_EQ(back.features, f);
  EXPECT_EQ(back.labels, set.labels);
  const std::string svg = scatter_svg(p, set.labels, "t");
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
}

// ---------------------------------------------------------------- training

TEST(EarlyStopping, FrozenValidationStopsAtBestPlusPatience) {
  EarlyStopping es(30);
  int stopped = 0;
  for (int epoch = 1; epoch <= 100; ++epoch) {
    es.update(epoch, epoch <= 7 ? epoch * 0.1 : 0.7);
    if (es.should_stop(epoch)) {
      stopped = epoch;
      break;
    }
  }
  EXPECT_EQ(es.best_epoch(), 7);
  EXPECT_EQ(stopped, 37);
}

TEST(ExperimentData, PoolsAreSeparated) {
  TempDir dir;
  const ExperimentConfig cfg = tiny_config(dir.path());
  const ExperimentData data = load_experiment_data(cfg);
  std::set<std::size_t> train_members, val_members;
  for (const auto& m : data.train_pool.members) train_members.insert(m.begin(), m.end());
  for (const auto& m : data.val_pool.members) val_members.insert(m.begin(), m.end());
  for (auto i : val_members) EXPECT_FALSE(train_members.count(i));
  EXPECT_EQ(train_members.size() + val_members.size(), data.train.size());
  EXPECT_EQ(data.test_pool.classes, (std::vector<std::string>{"cone_b", "cube_b", "cylinder_b", "sphere_b", "torus_b"}));
}

TEST(ExperimentData, BatchesAreClassMajor) {
  TempDir dir;
  const ExperimentConfig cfg = tiny_config(dir.path());
  const ExperimentData data = load_experiment_data(cfg);
  Rng rng(1);
  const Episode ep = sample_episode(data.test_pool, {5, 2, 3}, rng);
  const EpisodeBatch b = make_batch(data.test, ep, 16, nullptr, rng);
  EXPECT_EQ(b.support_clouds, 10);
  EXPECT_EQ(b.query_clouds, 15);
  EXPECT_EQ(b.xyz.rows(), 25 * 16);
  EXPECT_EQ(b.query_labels, ep.query_labels);
}

TEST(Trainer, SmokeRunWritesCheckpointsAndLogs) {
  TempDir dir;
  const ExperimentConfig cfg = tiny_config(dir / "run");
  const ExperimentData data = load_experiment_data(cfg);
  int logged = 0;
  const TrainResult r = train(cfg, data, [&](const EpochLog&) { ++logged; });
  EXPECT_EQ(logged, 5);
  EXPECT_EQ(r.epochs.size(), 5u);
  EXPECT_EQ(r.episode_losses.size(), 15u);
  for (double l : r.episode_losses) EXPECT_TRUE(std::isfinite(l));
  for (const auto& e : r.epochs) EXPECT_LE(e.val_accuracy, r.best_val_accuracy);
  EXPECT_TRUE(std::filesystem::exists(r.best_checkpoint));
  EXPECT_TRUE(std::filesystem::exists(r.last_checkpoint));
  EXPECT_TRUE(std::filesystem::exists(dir / "run" / "config.txt"));
  std::ifstream log(r.episode_log_path);
  std::string line;
  int rows = -1;
  while (std::getline(log, line)) ++rows;
  EXPECT_EQ(rows, 15);
  EXPECT_EQ(load_checkpoint(r.best_checkpoint).epoch, r.best_epoch);
  const EvalReport rep = evaluate_checkpoint(r.last_checkpoint, cfg, data);
  EXPECT_EQ(rep.accuracies.size(), 4u);
}

TEST(Trainer, DeterministicModeRepeatsExactly) {
  TempDir dir;
  ExperimentConfig cfg = tiny_config(dir / "a");
  cfg.epochs = 2;
  const ExperimentData data = load_experiment_data(cfg);
  const TrainResult a = train(cfg, data);
  cfg.out_dir = (dir / "b").string();
  const TrainResult b = train(cfg, data);
  EXPECT_EQ(a.episode_losses, b.episode_losses);
  EXPECT_EQ(a.episode_losses.back(), b.episode_losses.back());
}

TEST(CrossValidate, SingleFoldEqualsPlainTrainAndEvaluate) {
  TempDir dir;
  ExperimentConfig cfg = tiny_config(dir / "cv");
  cfg.epochs = 2;
  cfg.cv_folds = 1;
  const CrossValidationReport cv = cross_validate(cfg);
  ASSERT_EQ(cv.folds.size(), 1u);

  ExperimentConfig plain = cfg;
  plain.out_dir = (dir / "plain").string();
  const ExperimentData data = load_experiment_data(plain);
  const TrainResult r = train(plain, data);
  EXPECT_EQ(cv.folds[0].best.accuracies, evaluate_checkpoint(r.best_checkpoint, plain, data).accuracies);
  EXPECT_EQ(cv.folds[0].last.accuracies, evaluate_checkpoint(r.last_checkpoint, plain, data).accuracies);
  EXPECT_EQ(cv.chosen_mean, std::max(cv.best_mean, cv.last_mean));
  EXPECT_FALSE(format_cross_validation(cv).empty());
}

TEST(CrossValidate, ChooseTakesTheBetterAverage) {
  CrossValidationReport r;
  FoldOutcome a, b;
  a.best.mean = 50;
  a.last.mean = 60;
  b.best.mean = 70;
  b.last.mean = 50;
  r.folds = {a, b};
  choose(r);
  EXPECT_DOUBLE_EQ(r.best_mean, 60.0);
  EXPECT_DOUBLE_EQ(r.last_mean, 55.0);
  EXPECT_EQ(r.chosen, "best");
  EXPECT_DOUBLE_EQ(r.chosen_mean, 60.0);
}

}  // namespace
}  // namespace pcfsl
