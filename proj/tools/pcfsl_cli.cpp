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

// Command-line front end. Talks to the library only through pcfsl.h.

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pcfsl/pcfsl.h"

namespace {

struct ConfigArgs {
  std::string path;
  bool toy = false;
  std::vector<std::string> overrides;
};

void add_config_args(CLI::App* cmd, ConfigArgs& args, bool required) {
  auto* opt = cmd->add_option("-c,--config", args.path, "config file (flat key = value)");
  auto* toy = cmd->add_flag("--toy", args.toy, "start from the synthetic-benchmark preset");
  opt->excludes(toy);
  if (required) opt->check(CLI::ExistingFile);
  cmd->add_option("-s,--set", args.overrides, "override a key: --set key=value (repeatable)");
}

int report_failure(pcfsl_status status) {
  std::fprintf(stderr, "error: %s: %s\n", pcfsl_status_name(status), pcfsl_last_error());
  return static_cast<int>(status) + 1;
}

class ConfigHandle {
 public:
  ~ConfigHandle() { pcfsl_config_destroy(cfg_); }
  pcfsl_status open(const ConfigArgs& args, bool need_file) {
    pcfsl_status s;
    if (!args.path.empty())
      s = pcfsl_config_load(args.path.c_str(), &cfg_);
    else if (args.toy)
      s = pcfsl_config_create_toy(&cfg_);
    else if (need_file) {
      std::fprintf(stderr, "error: --config <file> or --toy is required\n");
      return PCFSL_ERR_INVALID_ARGUMENT;
    } else
      s = pcfsl_config_create(&cfg_);
    for (const auto& o : args.overrides)
      if (s == PCFSL_OK) s = pcfsl_config_apply(cfg_, o.c_str());
    return s;
  }
  pcfsl_config* get() const { return cfg_; }

 private:
  pcfsl_config* cfg_ = nullptr;
};

void print_line(const char* line, void*) {
  std::cout << line << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pcfsl: few-shot point cloud classification"};
  app.require_subcommand(1);
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "suppress progress lines");
  app.set_version_flag("--version", pcfsl_version());

  ConfigArgs prep_args, split_args, train_args, eval_args, cv_args, show_args;
  std::string raw_root, checkpoint, eval_out, report_in, report_out;
  int trials = 100;

  auto* prep = app.add_subcommand("prepare-data", "ingest a raw dataset into the point cache");
  add_config_args(prep, prep_args, false);
  prep->add_option("-r,--raw", raw_root, "raw dataset root (not needed for the synthetic benchmark)");

  auto* split = app.add_subcommand("inspect-split", "print the class split and instance counts");
  add_config_args(split, split_args, false);

  auto* train = app.add_subcommand("train", "episodic training");
  add_config_args(train, train_args, false);

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on fixed-seed test episodes");
  add_config_args(eval, eval_args, false);
  eval->add_option("-k,--checkpoint", checkpoint, "checkpoint file")->required()->check(CLI::ExistingFile);
  eval->add_option("-o,--out", eval_out, "write per-episode accuracies (CSV + .json sidecar)");

  auto* cv = app.add_subcommand("cross-validate", "train and evaluate every fold of the benchmark scheme");
  add_config_args(cv, cv_args, false);

  auto* report = app.add_subcommand("report", "ablation tables and embedding plots from stored results");
  report->add_option("-i,--in", report_in, "directory with *.eval.csv and embeddings*.csv")->required();
  report->add_option("-o,--out", report_out, "output directory")->required();

  auto* selftest = app.add_subcommand("selftest", "run the invariant, gradient and oracle suites");
  selftest->add_option("-t,--trials", trials, "random instances per oracle")->check(CLI::PositiveNumber);

  auto* show = app.add_subcommand("config", "print the effective configuration");
  add_config_args(show, show_args, false);
  bool keys = false;
  show->add_flag("--keys", keys, "list every key with its description");

  CLI11_PARSE(app, argc, argv);
  if (!quiet) pcfsl_set_log_callback(print_line, nullptr);

  pcfsl_status s = PCFSL_OK;
  const char* text = nullptr;

  if (*prep) {
    ConfigHandle cfg;
    if ((s = cfg.open(prep_args, false)) != PCFSL_OK) return report_failure(s);
    if ((s = pcfsl_prepare_data(cfg.get(), raw_root.empty() ? nullptr : raw_root.c_str(), &text)) != PCFSL_OK)
      return report_failure(s);
    std::cout << text;
  } else if (*split) {
    ConfigHandle cfg;
    if ((s = cfg.open(split_args, false)) != PCFSL_OK) return report_failure(s);
    if ((s = pcfsl_inspect_split(cfg.get(), &text)) != PCFSL_OK) return report_failure(s);
    std::cout << text;
  } else if (*train) {
    ConfigHandle cfg;
    if ((s = cfg.open(train_args, true)) != PCFSL_OK) return report_failure(s);
    if ((s = pcfsl_train(cfg.get(), &text)) != PCFSL_OK) return report_failure(s);
    std::cout << text;
  } else if (*eval) {
    ConfigHandle cfg;
    if ((s = cfg.open(eval_args, true)) != PCFSL_OK) return report_failure(s);
    pcfsl_report* rep = nullptr;
    if ((s = pcfsl_evaluate(cfg.get(), checkpoint.c_str(), &rep)) != PCFSL_OK) return report_failure(s);
    std::printf("episodes %zu\naccuracy %.2f +- %.2f\n", pcfsl_report_episodes(rep), pcfsl_report_mean(rep),
                pcfsl_report_ci95(rep));
    if (!eval_out.empty()) s = pcfsl_report_save(rep, eval_out.c_str());
    pcfsl_report_destroy(rep);
    if (s != PCFSL_OK) return report_failure(s);
  } else if (*cv) {
    ConfigHandle cfg;
    if ((s = cfg.open(cv_args, true)) != PCFSL_OK) return report_failure(s);
    if ((s = pcfsl_cross_validate(cfg.get(), &text)) != PCFSL_OK) return report_failure(s);
    std::cout << text;
  } else if (*report) {
    std::size_t found = 0;
    if ((s = pcfsl_report_dir(report_in.c_str(), report_out.c_str(), &found)) != PCFSL_OK) return report_failure(s);
    std::printf("%zu reports -> %s\n", found, report_out.c_str());
  } else if (*selftest) {
    if (quiet) pcfsl_set_log_callback(print_line, nullptr);
    int failures = 0;
    if ((s = pcfsl_selftest(trials, &failures)) != PCFSL_OK) return report_failure(s);
    std::printf("%s (%d failed)\n", failures == 0 ? "selftest passed" : "selftest FAILED", failures);
    return failures == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
  } else if (*show) {
    if (keys) {
      if ((s = pcfsl_config_schema(&text)) != PCFSL_OK) return report_failure(s);
      std::cout << text;
      return EXIT_SUCCESS;
    }
    ConfigHandle cfg;
    if ((s = cfg.open(show_args, false)) != PCFSL_OK) return report_failure(s);
    if ((s = pcfsl_config_text(cfg.get(), &text)) != PCFSL_OK) return report_failure(s);
    std::cout << text;
    if ((s = pcfsl_config_fingerprint(cfg.get(), &text)) != PCFSL_OK) return report_failure(s);
    std::cout << "# fingerprint " << text << "\n";
  }
  return EXIT_SUCCESS;
}
