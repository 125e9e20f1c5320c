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

#include "pcfsl/harness/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <random>
#include <sstream>

#include "pcfsl/rng.hpp"

namespace pcfsl {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
  fail(ErrorCode::kConfig, "config: bad value '" + std::string(value) + "' for " + std::string(key));
}

long long to_int(std::string_view key, std::string_view v) {
  long long out{};
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) bad_value(key, v);
  return out;
}

std::uint64_t to_u64(std::string_view key, std::string_view v) {
  std::uint64_t out{};
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) bad_value(key, v);
  return out;
}

double to_double(std::string_view key, std::string_view v) {
  const std::string s(v);
  char* end = nullptr;
  const double out = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) bad_value(key, v);
  return out;
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(key, v);
}

std::vector<int> to_int_list(std::string_view key, std::string_view v) {
  std::vector<int> out;
  std::size_t start = 0;
  while (start <= v.size()) {
    const auto comma = v.find(',', start);
    const std::string item = trim(v.substr(start, comma == std::string_view::npos ? v.npos : comma - start));
    if (item.empty()) bad_value(key, v);
    out.push_back(static_cast<int>(to_int(key, item)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string fmt_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

std::string fmt_bool(bool v) { return v ? "true" : "false"; }

std::string fmt_list(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

struct Field {
  ConfigKey key;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, std::string_view)> set;
  bool is_path = false;
};

#define PCFSL_INT(name, member, desc)                                                              \
  Field {                                                                                          \
    {name, desc}, [](const ExperimentConfig& c) { return std::to_string(c.member); },             \
        [](ExperimentConfig& c, std::string_view v) { c.member = static_cast<int>(to_int(name, v)); } \
  }
#define PCFSL_SIZE(name, member, desc)                                                                     \
  Field {                                                                                                  \
    {name, desc}, [](const ExperimentConfig& c) { return std::to_string(c.member); },                     \
        [](ExperimentConfig& c, std::string_view v) { c.member = static_cast<std::size_t>(to_u64(name, v)); } \
  }
#define PCFSL_U64(name, member, desc)                                                  \
  Field {                                                                              \
    {name, desc}, [](const ExperimentConfig& c) { return std::to_string(c.member); }, \
        [](ExperimentConfig& c, std::string_view v) { c.member = to_u64(name, v); }   \
  }
#define PCFSL_DOUBLE(name, member, desc)                                                  \
  Field {                                                                                 \
    {name, desc}, [](const ExperimentConfig& c) { return fmt_double(c.member); },        \
        [](ExperimentConfig& c, std::string_view v) { c.member = to_double(name, v); }   \
  }
#define PCFSL_BOOL(name, member, desc)                                                \
  Field {                                                                             \
    {name, desc}, [](const ExperimentConfig& c) { return fmt_bool(c.member); },      \
        [](ExperimentConfig& c, std::string_view v) { c.member = to_bool(name, v); } \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      Field{{"benchmark", "ModelNet40-FS | ShapeNet70-FS | ScanObjectNN-FS | Toy-FS"},
            [](const ExperimentConfig& c) { return std::string(benchmark_name(c.benchmark)); },
            [](ExperimentConfig& c, std::string_view v) { c.benchmark = parse_benchmark(v); }},
      PCFSL_INT("fold", fold, "held-out ScanObjectNN-FS split (0..2)"),
      PCFSL_INT("val_fold", val_fold, "validation subset of the training data (0..4)"),
      PCFSL_INT("n_way", episode.n_way, "classes per episode"),
      PCFSL_INT("k_shot", episode.k_shot, "support instances per class"),
      PCFSL_INT("q_query", episode.q_query, "query instances per class"),
      PCFSL_INT("points", points, "points sampled per instance"),
      Field{{"backbone", "dgcnn | pointnet"},
            [](const ExperimentConfig& c) { return std::string(backbone_name(c.model.backbone.variant)); },
            [](ExperimentConfig& c, std::string_view v) { c.model.backbone.variant = parse_backbone(v); }},
      PCFSL_INT("backbone.k", model.backbone.k, "EdgeConv neighborhood size"),
      Field{{"backbone.edge_widths", "EdgeConv output widths"},
            [](const ExperimentConfig& c) { return fmt_list(c.model.backbone.edge_widths); },
            [](ExperimentConfig& c, std::string_view v) {
              c.model.backbone.edge_widths = to_int_list("backbone.edge_widths", v);
            }},
      PCFSL_INT("backbone.embed_dim", model.backbone.embed_dim, "DGCNN per-point output width"),
      Field{{"backbone.pointnet_widths", "PointNet layer widths"},
            [](const ExperimentConfig& c) { return fmt_list(c.model.backbone.pointnet_widths); },
            [](ExperimentConfig& c, std::string_view v) {
              c.model.backbone.pointnet_widths = to_int_list("backbone.pointnet_widths", v);
            }},
      PCFSL_BOOL("spf.enabled", model.spf_enabled, "salient-part fusion"),
      PCFSL_INT("spf.k_s", model.spf.k_s, "salient parts per instance"),
      PCFSL_INT("spf.k", model.spf.k, "rows per part"),
      Field{{"spf.neighborhood_space", "feature | coordinate"},
            [](const ExperimentConfig& c) {
              return std::string(c.model.spf.space == NeighborhoodSpace::kFeature ? "feature" : "coordinate");
            },
            [](ExperimentConfig& c, std::string_view v) {
              if (v == "feature")
                c.model.spf.space = NeighborhoodSpace::kFeature;
              else if (v == "coordinate")
                c.model.spf.space = NeighborhoodSpace::kCoordinate;
              else
                bad_value("spf.neighborhood_space", v);
            }},
      PCFSL_BOOL("sci.enabled", model.sci_enabled, "self-channel interaction"),
      PCFSL_INT("sci.h_r", model.sci.h_r, "per-channel embedding width"),
      PCFSL_BOOL("cif.enabled", model.cif_enabled, "cross-instance fusion"),
      PCFSL_INT("cif.k1", model.cif.k1, "cross-set neighbors per anchor"),
      PCFSL_INT("cif.h", model.cif.h, "hidden width of the stack weight map"),
      PCFSL_BOOL("cif.transductive_test", model.cif_transductive_test, "run cross-instance fusion at test time"),
      Field{{"head.metric", "sqeuclid | cosine"},
            [](const ExperimentConfig& c) { return std::string(metric_name(c.model.metric)); },
            [](ExperimentConfig& c, std::string_view v) { c.model.metric = parse_metric(v); }},
      PCFSL_DOUBLE("head.tau_init", model.tau_init, "initial cosine scale"),
      PCFSL_BOOL("augment.enabled", augment, "training-time jitter and rotation"),
      PCFSL_DOUBLE("augment.jitter_sigma", augment_params.jitter_sigma, "jitter standard deviation"),
      PCFSL_DOUBLE("augment.jitter_clip", augment_params.jitter_clip, "jitter clip"),
      PCFSL_BOOL("augment.rotate", augment_params.rotate, "random up-axis rotation"),
      PCFSL_DOUBLE("optim.lr", lr, "Adam learning rate"),
      PCFSL_DOUBLE("optim.gamma", lr_gamma, "step decay factor"),
      PCFSL_INT("optim.step_epochs", lr_step_epochs, "epochs between decays"),
      PCFSL_INT("epochs", epochs, "maximum training epochs"),
      PCFSL_INT("train_episodes", train_episodes, "training episodes per epoch"),
      PCFSL_INT("val_episodes", val_episodes, "validation episodes per epoch"),
      PCFSL_INT("test_episodes", test_episodes, "evaluation episodes"),
      PCFSL_INT("patience", patience, "epochs without validation improvement before stopping"),
      PCFSL_INT("cv.folds", cv_folds, "cross-validation folds to run (0 = all)"),
      PCFSL_U64("seed", seed, "master seed"),
      PCFSL_U64("eval_seed", eval_seed, "evaluation episode seed"),
      PCFSL_BOOL("deterministic", deterministic, "pin every random source to the master seed"),
      PCFSL_SIZE("toy.instances_per_class", toy.instances_per_class, "synthetic instances per class"),
      PCFSL_SIZE("toy.points", toy.points_per_instance, "synthetic points per instance"),
      PCFSL_DOUBLE("toy.noise", toy.noise_sigma, "synthetic surface noise"),
      PCFSL_DOUBLE("toy.outlier_fraction", toy.outlier_fraction, "synthetic clutter fraction"),
      PCFSL_BOOL("toy.random_tilt", toy.random_tilt, "full 3D rotation of synthetic shapes"),
      PCFSL_U64("toy.seed", toy.seed, "synthetic generator seed"),
      Field{{"cache_dir", "prepared data root"},
            [](const ExperimentConfig& c) { return c.cache_dir; },
            [](ExperimentConfig& c, std::string_view v) { c.cache_dir = std::string(v); },
            true},
      Field{{"out_dir", "run output directory"},
            [](const ExperimentConfig& c) { return c.out_dir; },
            [](ExperimentConfig& c, std::string_view v) { c.out_dir = std::string(v); },
            true},
  };
  return table;
}

#undef PCFSL_INT
#undef PCFSL_SIZE
#undef PCFSL_U64
#undef PCFSL_DOUBLE
#undef PCFSL_BOOL

const Field& find_field(std::string_view key) {
  for (const auto& f : fields())
    if (f.key.name == key) return f;
  fail(ErrorCode::kConfig, "config: unknown key '" + std::string(key) + "'");
}

}  // namespace

void ExperimentConfig::validate() const {
  episode.validate();
  auto positive = [](int v, const char* what) {
    if (v < 1) fail(ErrorCode::kConfig, std::string("config: ") + what + " must be positive");
  };
  positive(points, "points");
  positive(epochs, "epochs");
  positive(train_episodes, "train_episodes");
  positive(val_episodes, "val_episodes");
  positive(test_episodes, "test_episodes");
  positive(patience, "patience");
  positive(lr_step_epochs, "optim.step_epochs");
  if (!(lr > 0.0)) fail(ErrorCode::kConfig, "config: optim.lr must be positive");
  if (fold < 0 || fold >= (benchmark == Benchmark::kScanObjectNNFS ? 3 : 1))
    fail(ErrorCode::kConfig, "config: fold out of range for " + std::string(benchmark_name(benchmark)));
  if (val_fold < 0 || val_fold > 4) fail(ErrorCode::kConfig, "config: val_fold must be in 0..4");
  if (cv_folds < 0) fail(ErrorCode::kConfig, "config: cv.folds must be >= 0");
  if (model.n_way != episode.n_way || model.k_shot != episode.k_shot)
    fail(ErrorCode::kConfig, "config: model n_way/k_shot out of sync with the episode spec");
  if (model.backbone.variant == BackboneVariant::kDgcnn && points <= model.backbone.k)
    fail(ErrorCode::kConfig, "config: points must exceed backbone.k");
  if (model.spf_enabled && (model.spf.k_s > points || model.spf.k >= points || model.spf.k_s < 1 || model.spf.k < 1))
    fail(ErrorCode::kConfig, "config: need 1 <= spf.k_s <= points and 1 <= spf.k < points");
  if (model.cif_enabled && (model.cif.k1 < 1 || model.cif.k1 > episode.query_size()))
    fail(ErrorCode::kConfig, "config: need 1 <= cif.k1 <= n_way * q_query");
}

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> out;
    for (const auto& f : fields()) out.push_back(f.key);
    return out;
  }();
  return keys;
}

void set_config_value(ExperimentConfig& cfg, std::string_view key, std::string_view value) {
  find_field(key).set(cfg, trim(value));
  cfg.model.n_way = cfg.episode.n_way;
  cfg.model.k_shot = cfg.episode.k_shot;
}

std::string get_config_value(const ExperimentConfig& cfg, std::string_view key) { return find_field(key).get(cfg); }

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig cfg;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      fail(ErrorCode::kConfig, "config line " + std::to_string(lineno) + ": expected key = value");
    set_config_value(cfg, trim(std::string_view(line).substr(0, eq)), std::string_view(line).substr(eq + 1));
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kNotFound, "config not found: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_text(const ExperimentConfig& cfg) {
  std::string out;
  for (const auto& f : fields()) out += f.key.name + " = " + f.get(cfg) + "\n";
  return out;
}

void save_config(const ExperimentConfig& cfg, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  out << to_text(cfg);
}

void apply_override(ExperimentConfig& cfg, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) fail(ErrorCode::kConfig, "override must be key=value: " + std::string(assignment));
  set_config_value(cfg, trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

std::string fingerprint(const ExperimentConfig& cfg) {
  std::string text;
  for (const auto& f : fields())
    if (!f.is_path) text += f.key.name + "=" + f.get(cfg) + "\n";
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << fnv1a(text);
  return os.str();
}

std::filesystem::path resolve_cache_dir(const ExperimentConfig& cfg) {
  const char* env = std::getenv("PCIA_CACHE");
  const std::filesystem::path root = (env && *env) ? std::filesystem::path(env) : std::filesystem::path(cfg.cache_dir);
  return root / std::string(benchmark_name(cfg.benchmark));
}

std::uint64_t effective_seed(const ExperimentConfig& cfg) {
  if (cfg.deterministic) return cfg.seed;
  std::random_device rd;
  return mix_seed(cfg.seed ^ (static_cast<std::uint64_t>(rd()) << 32 | rd()));
}

ExperimentConfig toy_config() {
  ExperimentConfig cfg;
  cfg.benchmark = Benchmark::kToy;
  cfg.points = 128;
  cfg.model.backbone.k = 10;
  cfg.model.backbone.edge_widths = {32, 32, 64, 64};
  cfg.model.backbone.embed_dim = 128;
  cfg.model.spf.k_s = 16;
  cfg.model.spf.k = 8;
  cfg.model.sci.h_r = 16;
  cfg.model.cif.h = 16;
  cfg.epochs = 10;
  cfg.train_episodes = 100;
  cfg.val_episodes = 30;
  cfg.test_episodes = 100;
  cfg.patience = 30;
  cfg.lr = 0.002;
  cfg.lr_step_epochs = 20;
  cfg.toy.instances_per_class = 100;
  cfg.toy.points_per_instance = 256;
  cfg.out_dir = "runs/toy";
  return cfg;
}

}  // namespace pcfsl
