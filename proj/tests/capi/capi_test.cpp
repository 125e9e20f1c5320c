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
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "pcfsl/pcfsl.h"

namespace {

namespace fs = std::filesystem;

class ScratchDir {
 public:
  ScratchDir() : path_(fs::temp_directory_path() / ("pcfsl-capi-" + std::to_string(::getpid()))) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  std::string operator/(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

const char* kTinyToy =
    "benchmark = toy\n"
    "points = 32\n"
    "backbone.k = 4\n"
    "backbone.edge_widths = 8,8\n"
    "backbone.embed_dim = 16\n"
    "spf.k_s = 4\n"
    "spf.k = 4\n"
    "sci.h_r = 4\n"
    "cif.h = 4\n"
    "q_query = 3\n"
    "epochs = 2\n"
    "train_episodes = 2\n"
    "val_episodes = 2\n"
    "test_episodes = 3\n"
    "toy.instances_per_class = 20\n"
    "toy.points = 40\n";

TEST(CApi, StatusNamesAndVersion) {
  EXPECT_STREQ(pcfsl_status_name(PCFSL_OK), "ok");
  EXPECT_STRNE(pcfsl_status_name(PCFSL_ERR_CONFIG), pcfsl_status_name(PCFSL_ERR_IO));
  EXPECT_GT(std::string(pcfsl_version()).size(), 0u);
}

TEST(CApi, NullArgumentsAreRejected) {
  EXPECT_EQ(pcfsl_config_create(nullptr), PCFSL_ERR_INVALID_ARGUMENT);
  EXPECT_NE(std::string(pcfsl_last_error()), "");
  EXPECT_EQ(pcfsl_config_set(nullptr, "epochs", "3"), PCFSL_ERR_INVALID_ARGUMENT);
  pcfsl_config_destroy(nullptr);
  pcfsl_report_destroy(nullptr);
  pcfsl_model_destroy(nullptr);
}

TEST(CApi, ConfigSetGetAndFailedSetsLeaveItUntouched) {
  pcfsl_config* cfg = nullptr;
  ASSERT_EQ(pcfsl_config_create(&cfg), PCFSL_OK);
  const char* value = nullptr;
  ASSERT_EQ(pcfsl_config_get(cfg, "test_episodes", &value), PCFSL_OK);
  EXPECT_STREQ(value, "700");
  EXPECT_EQ(pcfsl_config_set(cfg, "epochs", "12"), PCFSL_OK);
  EXPECT_EQ(pcfsl_config_apply(cfg, "cif.enabled = false"), PCFSL_OK);
  EXPECT_EQ(pcfsl_config_set(cfg, "epochs", "-1"), PCFSL_ERR_CONFIG);
  EXPECT_EQ(pcfsl_config_set(cfg, "bogus", "1"), PCFSL_ERR_CONFIG);
  EXPECT_EQ(pcfsl_config_get(cfg, "bogus", &value), PCFSL_ERR_CONFIG);
  ASSERT_EQ(pcfsl_config_get(cfg, "epochs", &value), PCFSL_OK);
  EXPECT_STREQ(value, "12");
  ASSERT_EQ(pcfsl_config_get(cfg, "cif.enabled", &value), PCFSL_OK);
  EXPECT_STREQ(value, "false");

  const char* text = nullptr;
  ASSERT_EQ(pcfsl_config_text(cfg, &text), PCFSL_OK);
  const std::string saved = text;
  pcfsl_config* again = nullptr;
  ASSERT_EQ(pcfsl_config_parse(saved.c_str(), &again), PCFSL_OK);
  const char* fp1 = nullptr;
  ASSERT_EQ(pcfsl_config_fingerprint(cfg, &fp1), PCFSL_OK);
  const std::string a = fp1;
  ASSERT_EQ(pcfsl_config_fingerprint(again, &fp1), PCFSL_OK);
  EXPECT_EQ(a, fp1);
  pcfsl_config_destroy(again);
  pcfsl_config_destroy(cfg);

  EXPECT_EQ(pcfsl_config_load("/nonexistent/config.txt", &cfg), PCFSL_ERR_NOT_FOUND);
  EXPECT_EQ(pcfsl_config_parse("epochs = zero\n", &cfg), PCFSL_ERR_CONFIG);
  ASSERT_EQ(pcfsl_config_schema(&text), PCFSL_OK);
  EXPECT_NE(std::string(text).find("head.metric\t"), std::string::npos);
}

TEST(CApi, ReportFilesRoundTrip) {
  ScratchDir dir;
  EXPECT_EQ(pcfsl_report_load((dir / "missing.csv").c_str(), nullptr), PCFSL_ERR_INVALID_ARGUMENT);
  pcfsl_report* rep = nullptr;
  EXPECT_NE(pcfsl_report_load((dir / "missing.csv").c_str(), &rep), PCFSL_OK);
  size_t found = 99;
  ASSERT_EQ(pcfsl_report_dir((dir / "").c_str(), (dir / "out").c_str(), &found), PCFSL_OK);
  EXPECT_EQ(found, 0u);
}

TEST(CApi, TrainEvaluateAndClassify) {
  ScratchDir dir;
  pcfsl_config* cfg = nullptr;
  ASSERT_EQ(pcfsl_config_parse(kTinyToy, &cfg), PCFSL_OK);
  ASSERT_EQ(pcfsl_config_set(cfg, "out_dir", (dir / "run").c_str()), PCFSL_OK);
  ASSERT_EQ(pcfsl_config_set(cfg, "cache_dir", (dir / "cache").c_str()), PCFSL_OK);

  const char* text = nullptr;
  ASSERT_EQ(pcfsl_prepare_data(cfg, nullptr, &text), PCFSL_OK) << pcfsl_last_error();
  EXPECT_NE(std::string(text).find("instances 200"), std::string::npos) << text;
  ASSERT_EQ(pcfsl_inspect_split(cfg, &text), PCFSL_OK) << pcfsl_last_error();
  ASSERT_EQ(pcfsl_train(cfg, &text), PCFSL_OK) << pcfsl_last_error();
  const std::string ckpt = dir / "run/last.ckpt";
  ASSERT_TRUE(fs::exists(ckpt));

  pcfsl_report* rep = nullptr;
  ASSERT_EQ(pcfsl_evaluate(cfg, ckpt.c_str(), &rep), PCFSL_OK) << pcfsl_last_error();
  EXPECT_EQ(pcfsl_report_episodes(rep), 3u);
  double sum = 0.0;
  for (size_t i = 0; i < 3; ++i) {
    const double a = pcfsl_report_accuracy(rep, i);
    EXPECT_GE(a, 0.0);
    EXPECT_LE(a, 1.0);
    sum += a;
  }
  EXPECT_EQ(pcfsl_report_accuracy(rep, 3), -1.0);
  EXPECT_NEAR(pcfsl_report_mean(rep), 100.0 * sum / 3.0, 1e-9);
  ASSERT_EQ(pcfsl_report_save(rep, (dir / "r.eval.csv").c_str()), PCFSL_OK);
  pcfsl_report* back = nullptr;
  ASSERT_EQ(pcfsl_report_load((dir / "r.eval.csv").c_str(), &back), PCFSL_OK);
  EXPECT_EQ(pcfsl_report_mean(back), pcfsl_report_mean(rep));
  EXPECT_EQ(pcfsl_report_ci95(back), pcfsl_report_ci95(rep));
  pcfsl_report_destroy(back);
  pcfsl_report_destroy(rep);

  pcfsl_model* model = nullptr;
  ASSERT_EQ(pcfsl_model_load(cfg, ckpt.c_str(), &model), PCFSL_OK) << pcfsl_last_error();
  std::mt19937 rng(3);
  std::normal_distribution<float> d;
  const int points = 32, support = 5, queries = 4;
  std::vector<float> xyz(static_cast<size_t>((support + queries) * points * 3));
  for (auto& v : xyz) v = d(rng);
  std::vector<int> pred(queries, -1);
  ASSERT_EQ(pcfsl_model_classify(model, xyz.data(), points, support, queries, pred.data()), PCFSL_OK)
      << pcfsl_last_error();
  for (int p : pred) {
    EXPECT_GE(p, 0);
    EXPECT_LT(p, 5);
  }
  EXPECT_EQ(pcfsl_model_classify(model, xyz.data(), points, 4, queries, pred.data()), PCFSL_ERR_INVALID_ARGUMENT);
  xyz[7] = std::nanf("");
  EXPECT_EQ(pcfsl_model_classify(model, xyz.data(), points, support, queries, pred.data()), PCFSL_ERR_INVALID_ARGUMENT);
  pcfsl_model_destroy(model);

  pcfsl_config* other = nullptr;
  ASSERT_EQ(pcfsl_config_parse(kTinyToy, &other), PCFSL_OK);
  ASSERT_EQ(pcfsl_config_set(other, "backbone.embed_dim", "24"), PCFSL_OK);
  EXPECT_EQ(pcfsl_model_load(other, ckpt.c_str(), &model), PCFSL_ERR_CONFIG);
  pcfsl_config_destroy(other);
  pcfsl_config_destroy(cfg);
}

}  // namespace
