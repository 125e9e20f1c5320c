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

#include "pcfsl/pcfsl.h"

#include <memory>
#include <mutex>
#include <sstream>
#include <string>

#include "pcfsl/data/cache.hpp"
#include "pcfsl/harness/checkpoint.hpp"
#include "pcfsl/harness/config.hpp"
#include "pcfsl/harness/cross_validate.hpp"
#include "pcfsl/harness/evaluator.hpp"
#include "pcfsl/harness/experiment_data.hpp"
#include "pcfsl/harness/report.hpp"
#include "pcfsl/harness/trainer.hpp"
#include "pcfsl/verify/suites.hpp"

struct pcfsl_config {
  pcfsl::ExperimentConfig cfg;
};

struct pcfsl_report {
  pcfsl::EvalReport report;
};

struct pcfsl_model {
  pcfsl::ExperimentConfig cfg;
  std::unique_ptr<pcfsl::FewShotModel> model;
};

namespace {

thread_local std::string g_error;
thread_local std::string g_text;

std::mutex g_log_mutex;
pcfsl_log_fn g_log_fn = nullptr;
void* g_log_user = nullptr;

void log_line(const std::string& line) {
  std::lock_guard<std::mutex> lock(g_log_mutex);
  if (g_log_fn) g_log_fn(line.c_str(), g_log_user);
}

pcfsl_status to_status(pcfsl::ErrorCode code) { return static_cast<pcfsl_status>(static_cast<int>(code)); }

template <class F>
pcfsl_status guarded(F&& body) {
  g_error.clear();
  try {
    body();
    return PCFSL_OK;
  } catch (const pcfsl::Error& e) {
    g_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_error = "out of memory";
  } catch (const std::exception& e) {
    g_error = e.what();
  } catch (...) {
    g_error = "unknown error";
  }
  return PCFSL_ERR_INTERNAL;
}

void need(const void* p, const char* what) {
  if (!p) pcfsl::fail(pcfsl::ErrorCode::kInvalidArgument, std::string(what) + " is null");
}

const char* hand_out(std::string text) {
  g_text = std::move(text);
  return g_text.c_str();
}

pcfsl::TrainLogger epoch_logger(const std::string& prefix = "") {
  return [prefix](const pcfsl::EpochLog& e) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(4);
    os << prefix << "epoch " << e.epoch << " lr " << e.lr << " loss " << e.train_loss;
    os.precision(2);
    os << " train_acc " << e.train_accuracy << " val_acc " << e.val_accuracy << " +- " << e.val_ci95 << " ("
       << e.seconds << "s)";
    log_line(os.str());
  };
}

std::string split_summary(const pcfsl::ExperimentData& data) {
  std::ostringstream os;
  os << "benchmark " << pcfsl::benchmark_name(data.split.benchmark) << " split " << data.split.fold_index << "\n";
  auto block = [&](const char* name, const std::vector<pcfsl::LabeledInstance>& instances, const pcfsl::ClassPool& pool) {
    os << name << ": " << pool.class_count() << " classes, " << instances.size() << " instances\n";
    for (std::size_t c = 0; c < pool.class_count(); ++c)
      os << "  " << pool.classes[c] << " " << pool.members[c].size() << "\n";
  };
  block("train", data.train, pcfsl::make_pool(data.train));
  block("test", data.test, data.test_pool);
  std::size_t val = 0;
  for (const auto& m : data.val_pool.members) val += m.size();
  os << "validation subset: " << val << " instances\n";
  return os.str();
}

std::string table_summary(const pcfsl::ExperimentConfig& cfg) {
  const pcfsl::ClassTable table = pcfsl::class_table(cfg.benchmark, cfg.fold);
  std::ostringstream os;
  os << "benchmark " << pcfsl::benchmark_name(cfg.benchmark) << " split " << cfg.fold
     << " (no prepared cache; published class lists)\n";
  auto block = [&](const char* name, const std::vector<pcfsl::ClassInfo>& infos) {
    std::size_t total = 0;
    for (const auto& c : infos) total += c.expected;
    os << name << ": " << infos.size() << " classes, " << total << " instances\n";
    for (const auto& c : infos) os << "  " << c.name << " " << c.expected << "\n";
  };
  block("train", table.train);
  block("test", table.test);
  return os.str();
}

}  // namespace

extern "C" {

const char* pcfsl_version(void) { return "0.1.0"; }

const char* pcfsl_status_name(pcfsl_status status) {
  switch (status) {
    case PCFSL_OK: return "ok";
    case PCFSL_ERR_INVALID_ARGUMENT: return "invalid argument";
    case PCFSL_ERR_CONFIG: return "configuration error";
    case PCFSL_ERR_NOT_FOUND: return "not found";
    case PCFSL_ERR_IO: return "i/o error";
    case PCFSL_ERR_FORMAT: return "format error";
    case PCFSL_ERR_NUMERIC: return "numeric error";
    case PCFSL_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* pcfsl_last_error(void) { return g_error.c_str(); }

void pcfsl_set_log_callback(pcfsl_log_fn fn, void* user) {
  std::lock_guard<std::mutex> lock(g_log_mutex);
  g_log_fn = fn;
  g_log_user = user;
}

pcfsl_status pcfsl_config_create(pcfsl_config** out) {
  return guarded([&] {
    need(out, "out");
    *out = new pcfsl_config{};
  });
}

pcfsl_status pcfsl_config_create_toy(pcfsl_config** out) {
  return guarded([&] {
    need(out, "out");
    *out = new pcfsl_config{pcfsl::toy_config()};
  });
}

pcfsl_status pcfsl_config_load(const char* path, pcfsl_config** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new pcfsl_config{pcfsl::load_config(path)};
  });
}

pcfsl_status pcfsl_config_parse(const char* text, pcfsl_config** out) {
  return guarded([&] {
    need(text, "text");
    need(out, "out");
    *out = new pcfsl_config{pcfsl::parse_config(text)};
  });
}

void pcfsl_config_destroy(pcfsl_config* config) { delete config; }

pcfsl_status pcfsl_config_set(pcfsl_config* config, const char* key, const char* value) {
  return guarded([&] {
    need(config, "config");
    need(key, "key");
    need(value, "value");
    pcfsl::ExperimentConfig next = config->cfg;
    pcfsl::set_config_value(next, key, value);
    next.validate();
    config->cfg = std::move(next);
  });
}

pcfsl_status pcfsl_config_apply(pcfsl_config* config, const char* assignment) {
  return guarded([&] {
    need(config, "config");
    need(assignment, "assignment");
    pcfsl::ExperimentConfig next = config->cfg;
    pcfsl::apply_override(next, assignment);
    next.validate();
    config->cfg = std::move(next);
  });
}

pcfsl_status pcfsl_config_get(const pcfsl_config* config, const char* key, const char** value) {
  return guarded([&] {
    need(config, "config");
    need(key, "key");
    need(value, "value");
    *value = hand_out(pcfsl::get_config_value(config->cfg, key));
  });
}

pcfsl_status pcfsl_config_text(const pcfsl_config* config, const char** text) {
  return guarded([&] {
    need(config, "config");
    need(text, "text");
    *text = hand_out(pcfsl::to_text(config->cfg));
  });
}

pcfsl_status pcfsl_config_save(const pcfsl_config* config, const char* path) {
  return guarded([&] {
    need(config, "config");
    need(path, "path");
    pcfsl::save_config(config->cfg, path);
  });
}

pcfsl_status pcfsl_config_fingerprint(const pcfsl_config* config, const char** hex) {
  return guarded([&] {
    need(config, "config");
    need(hex, "hex");
    *hex = hand_out(pcfsl::fingerprint(config->cfg));
  });
}

pcfsl_status pcfsl_config_schema(const char** text) {
  return guarded([&] {
    need(text, "text");
    std::string out;
    for (const auto& k : pcfsl::config_keys()) out += k.name + "\t" + k.description + "\n";
    *text = hand_out(std::move(out));
  });
}

pcfsl_status pcfsl_prepare_data(const pcfsl_config* config, const char* raw_root, const char** summary) {
  return guarded([&] {
    need(config, "config");
    const auto& cfg = config->cfg;
    if (cfg.benchmark != pcfsl::Benchmark::kToy) need(raw_root, "raw_root");
    pcfsl::LoadOptions options;
    options.seed = pcfsl::derive_seed(pcfsl::effective_seed(cfg), pcfsl::seed_tag::kIngest);
    options.toy = cfg.toy;
    const auto dir = pcfsl::resolve_cache_dir(cfg);
    const pcfsl::PrepareSummary s = pcfsl::prepare_data(raw_root ? raw_root : "", cfg.benchmark, dir, options);
    std::ostringstream os;
    os << "benchmark " << pcfsl::benchmark_name(s.benchmark) << "\n"
       << "cache " << dir.string() << "\n"
       << "instances " << s.instances << "\n"
       << "train " << s.train_classes << " classes, " << s.train_instances << " instances\n"
       << "test " << s.test_classes << " classes, " << s.test_instances << " instances\n";
    for (const auto& [name, count] : s.per_class) os << "  " << name << " " << count << "\n";
    for (const auto& c : s.ignored_classes) os << "ignored class " << c << "\n";
    for (const auto& e : s.errors) os << "skipped " << e.path << ": " << e.message << "\n";
    if (summary) *summary = hand_out(os.str());
  });
}

pcfsl_status pcfsl_inspect_split(const pcfsl_config* config, const char** summary) {
  return guarded([&] {
    need(config, "config");
    need(summary, "summary");
    try {
      *summary = hand_out(split_summary(pcfsl::load_experiment_data(config->cfg)));
    } catch (const pcfsl::Error& e) {
      if (e.code() != pcfsl::ErrorCode::kNotFound) throw;
      *summary = hand_out(table_summary(config->cfg));
    }
  });
}

pcfsl_status pcfsl_train(const pcfsl_config* config, const char** summary) {
  return guarded([&] {
    need(config, "config");
    const auto data = pcfsl::load_experiment_data(config->cfg);
    const pcfsl::TrainResult r = pcfsl::train(config->cfg, data, epoch_logger());
    std::ostringstream os;
    os << "best epoch " << r.best_epoch << " val_acc " << r.best_val_accuracy << (r.early_stopped ? " (early stop)" : "")
       << "\nbest " << r.best_checkpoint.string() << "\nlast " << r.last_checkpoint.string() << "\nlog "
       << r.log_path.string() << "\n";
    if (summary) *summary = hand_out(os.str());
  });
}

pcfsl_status pcfsl_evaluate(const pcfsl_config* config, const char* checkpoint, pcfsl_report** out) {
  return guarded([&] {
    need(config, "config");
    need(checkpoint, "checkpoint");
    need(out, "out");
    const auto data = pcfsl::load_experiment_data(config->cfg);
    *out = new pcfsl_report{pcfsl::evaluate_checkpoint(checkpoint, config->cfg, data)};
  });
}

pcfsl_status pcfsl_cross_validate(const pcfsl_config* config, const char** summary) {
  return guarded([&] {
    need(config, "config");
    const auto report = pcfsl::cross_validate(config->cfg, epoch_logger());
    if (summary) *summary = hand_out(pcfsl::format_cross_validation(report));
  });
}

pcfsl_status pcfsl_report_dir(const char* in_dir, const char* out_dir, size_t* reports_found) {
  return guarded([&] {
    need(in_dir, "in_dir");
    need(out_dir, "out_dir");
    const std::size_t n = pcfsl::write_report_dir(in_dir, out_dir);
    if (reports_found) *reports_found = n;
  });
}

size_t pcfsl_report_episodes(const pcfsl_report* report) { return report ? report->report.accuracies.size() : 0; }

double pcfsl_report_accuracy(const pcfsl_report* report, size_t index) {
  if (!report || index >= report->report.accuracies.size()) return -1.0;
  return report->report.accuracies[index];
}

double pcfsl_report_mean(const pcfsl_report* report) { return report ? report->report.mean : 0.0; }
double pcfsl_report_ci95(const pcfsl_report* report) { return report ? report->report.ci95 : 0.0; }

pcfsl_status pcfsl_report_save(const pcfsl_report* report, const char* csv_path) {
  return guarded([&] {
    need(report, "report");
    need(csv_path, "csv_path");
    pcfsl::write_report(report->report, csv_path);
  });
}

pcfsl_status pcfsl_report_load(const char* csv_path, pcfsl_report** out) {
  return guarded([&] {
    need(csv_path, "csv_path");
    need(out, "out");
    *out = new pcfsl_report{pcfsl::read_report(csv_path)};
  });
}

void pcfsl_report_destroy(pcfsl_report* report) { delete report; }

pcfsl_status pcfsl_model_load(const pcfsl_config* config, const char* checkpoint, pcfsl_model** out) {
  return guarded([&] {
    need(config, "config");
    need(checkpoint, "checkpoint");
    need(out, "out");
    const pcfsl::Checkpoint ckpt = pcfsl::load_checkpoint(checkpoint);
    pcfsl::check_compatible(ckpt, config->cfg);
    auto m = std::make_unique<pcfsl_model>();
    m->cfg = config->cfg;
    m->model = std::make_unique<pcfsl::FewShotModel>(config->cfg.model, pcfsl::effective_seed(config->cfg));
    pcfsl::restore(*m->model, ckpt);
    *out = m.release();
  });
}

void pcfsl_model_destroy(pcfsl_model* model) { delete model; }

pcfsl_status pcfsl_model_classify(pcfsl_model* model, const float* xyz, int points, int support_clouds,
                                  int query_clouds, int* predictions) {
  return guarded([&] {
    need(model, "model");
    need(xyz, "xyz");
    need(predictions, "predictions");
    const auto& opt = model->model->options();
    if (points <= 0 || query_clouds <= 0 || support_clouds != opt.n_way * opt.k_shot)
      pcfsl::fail(pcfsl::ErrorCode::kInvalidArgument,
                  "classify: expected " + std::to_string(opt.n_way * opt.k_shot) + " support clouds and a positive query count");
    pcfsl::EpisodeBatch batch;
    batch.points = points;
    batch.support_clouds = support_clouds;
    batch.query_clouds = query_clouds;
    batch.query_labels.assign(static_cast<std::size_t>(query_clouds), 0);
    const Eigen::Index rows = static_cast<Eigen::Index>(support_clouds + query_clouds) * points;
    batch.xyz = Eigen::Map<const Eigen::Matrix<float, Eigen::Dynamic, 3, Eigen::RowMajor>>(xyz, rows, 3).cast<pcfsl::Real>();
    if (!batch.xyz.allFinite()) pcfsl::fail(pcfsl::ErrorCode::kInvalidArgument, "classify: non-finite coordinates");
    pcfsl::ModelPredictor predictor(*model->model);
    const auto pred = predictor.predict(batch);
    std::copy(pred.begin(), pred.end(), predictions);
  });
}

pcfsl_status pcfsl_selftest(int oracle_trials, int* failures) {
  return guarded([&] {
    if (oracle_trials <= 0) pcfsl::fail(pcfsl::ErrorCode::kInvalidArgument, "selftest: oracle_trials must be positive");
    int failed = 0;
    for (int which = 0; which < 3; ++which) {
      const pcfsl::SuiteResult suite = which == 0   ? pcfsl::run_invariant_suite()
                                       : which == 1 ? pcfsl::run_gradient_suite()
                                                    : pcfsl::run_oracle_suite(oracle_trials);
      for (const auto& c : suite.checks) log_line(std::string(c.passed ? "PASS " : "FAIL ") + c.name + "  " + c.detail);
      std::ostringstream os;
      os.precision(3);
      os << suite.suite << ": " << suite.checks.size() - suite.failures() << "/" << suite.checks.size() << " passed in "
         << suite.seconds << "s";
      log_line(os.str());
      failed += static_cast<int>(suite.failures());
    }
    if (failures) *failures = failed;
  });
}

}  // extern "C"
