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

#include "pcfsl/harness/checkpoint.hpp"

#include <array>
#include <bit>
#include <fstream>

namespace pcfsl {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

constexpr std::array<char, 8> kMagic = {'P', 'C', 'F', 'S', 'L', 'C', 'K', 'P'};

template <typename T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_string(std::ostream& out, const std::string& s) {
  put(out, static_cast<std::uint64_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

class Reader {
 public:
  Reader(std::istream& in, std::filesystem::path path) : in_(in), path_(std::move(path)) {}

  template <typename T>
  T get() {
    T v{};
    read(&v, sizeof v);
    return v;
  }

  std::string get_string() {
    const auto n = get<std::uint64_t>();
    if (n > (1ULL << 30)) fail(ErrorCode::kFormat, path_.string() + ": implausible string length");
    std::string s(n, '\0');
    read(s.data(), n);
    return s;
  }

  void read(void* dst, std::size_t n) {
    if (!in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n)))
      fail(ErrorCode::kFormat, path_.string() + ": truncated checkpoint");
  }

 private:
  std::istream& in_;
  std::filesystem::path path_;
};

std::string module_layout(const ExperimentConfig& cfg) {
  std::string out;
  for (const char* key : {"backbone", "backbone.edge_widths", "backbone.embed_dim", "backbone.pointnet_widths",
                          "spf.enabled", "sci.enabled", "sci.h_r", "cif.enabled", "cif.k1", "cif.h", "head.metric",
                          "n_way"})
    out += std::string(key) + "=" + get_config_value(cfg, key) + ";";
  return out;
}

}  // namespace

std::uint64_t param_hash(const std::vector<NamedTensor>& tensors) {
  std::uint64_t h = fnv1a("");
  for (const auto& t : tensors) {
    h = fnv1a(t.name, h);
    const std::array<std::int64_t, 2> shape = {t.value.rows(), t.value.cols()};
    h = fnv1a(std::string_view(reinterpret_cast<const char*>(shape.data()), sizeof shape), h);
    h = fnv1a(std::string_view(reinterpret_cast<const char*>(t.value.data()),
                               static_cast<std::size_t>(t.value.size()) * sizeof(Real)),
              h);
  }
  return h;
}

Checkpoint snapshot(const FewShotModel& model, const ExperimentConfig& cfg, int epoch, double val_accuracy) {
  Checkpoint c;
  c.variant = std::string(backbone_name(model.options().backbone.variant));
  c.config_text = to_text(cfg);
  c.config_fingerprint = fingerprint(cfg);
  c.n_way = model.options().n_way;
  c.epoch = epoch;
  c.val_accuracy = val_accuracy;
  for (const auto& [name, p] : model.params().entries()) c.tensors.push_back({name, p->value});
  c.param_hash = param_hash(c.tensors);
  return c;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::kIo, "cannot write " + tmp);
    out.write(kMagic.data(), kMagic.size());
    put(out, kCheckpointVersion);
    put_string(out, ckpt.variant);
    put_string(out, ckpt.config_text);
    put_string(out, ckpt.config_fingerprint);
    put(out, static_cast<std::int32_t>(ckpt.n_way));
    put(out, static_cast<std::int32_t>(ckpt.epoch));
    put(out, ckpt.val_accuracy);
    put(out, ckpt.param_hash);
    put(out, static_cast<std::uint32_t>(ckpt.tensors.size()));
    for (const auto& t : ckpt.tensors) {
      put_string(out, t.name);
      put(out, static_cast<std::uint32_t>(t.value.rows()));
      put(out, static_cast<std::uint32_t>(t.value.cols()));
      out.write(reinterpret_cast<const char*>(t.value.data()),
                static_cast<std::streamsize>(t.value.size() * static_cast<Eigen::Index>(sizeof(Real))));
    }
    if (!out) fail(ErrorCode::kIo, "write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kNotFound, "checkpoint not found: " + path.string());
  Reader r(in, path);
  std::array<char, 8> magic{};
  r.read(magic.data(), magic.size());
  if (magic != kMagic) fail(ErrorCode::kFormat, path.string() + ": not a checkpoint");
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion)
    fail(ErrorCode::kFormat, path.string() + ": unsupported checkpoint version " + std::to_string(version));
  Checkpoint c;
  c.variant = r.get_string();
  c.config_text = r.get_string();
  c.config_fingerprint = r.get_string();
  c.n_way = r.get<std::int32_t>();
  c.epoch = r.get<std::int32_t>();
  c.val_accuracy = r.get<double>();
  c.param_hash = r.get<std::uint64_t>();
  const auto count = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor t;
    t.name = r.get_string();
    const auto rows = r.get<std::uint32_t>();
    const auto cols = r.get<std::uint32_t>();
    if (static_cast<std::uint64_t>(rows) * cols > (1ULL << 31))
      fail(ErrorCode::kFormat, path.string() + ": implausible tensor shape");
    t.value.resize(rows, cols);
    r.read(t.value.data(), static_cast<std::size_t>(t.value.size()) * sizeof(Real));
    c.tensors.push_back(std::move(t));
  }
  if (param_hash(c.tensors) != c.param_hash) fail(ErrorCode::kFormat, path.string() + ": parameter hash mismatch");
  return c;
}

void restore(FewShotModel& model, const Checkpoint& ckpt) {
  if (ckpt.variant != backbone_name(model.options().backbone.variant))
    fail(ErrorCode::kConfig, "checkpoint backbone '" + ckpt.variant + "' does not match the model");
  if (ckpt.n_way != model.options().n_way)
    fail(ErrorCode::kConfig, "checkpoint was trained for N=" + std::to_string(ckpt.n_way) + ", model expects N=" +
                                 std::to_string(model.options().n_way));
  const auto& entries = model.params().entries();
  if (entries.size() != ckpt.tensors.size())
    fail(ErrorCode::kConfig, "checkpoint tensor count does not match the model");
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& t = ckpt.tensors[i];
    Param& p = *entries[i].second;
    if (t.name != entries[i].first || t.value.rows() != p.value.rows() || t.value.cols() != p.value.cols())
      fail(ErrorCode::kConfig, "checkpoint tensor '" + t.name + "' does not match model tensor '" + entries[i].first + "'");
  }
  for (std::size_t i = 0; i < entries.size(); ++i) entries[i].second->value = ckpt.tensors[i].value;
}

void check_compatible(const Checkpoint& ckpt, const ExperimentConfig& cfg) {
  const ExperimentConfig stored = parse_config(ckpt.config_text);
  if (ckpt.variant != backbone_name(cfg.model.backbone.variant))
    fail(ErrorCode::kConfig, "checkpoint backbone '" + ckpt.variant + "' does not match config");
  if (module_layout(stored) != module_layout(cfg))
    fail(ErrorCode::kConfig, "checkpoint module layout does not match config");
  if (stored.benchmark != cfg.benchmark) fail(ErrorCode::kConfig, "checkpoint was trained on another benchmark");
  if (stored.benchmark == Benchmark::kScanObjectNNFS && stored.fold != cfg.fold)
    fail(ErrorCode::kConfig, "checkpoint was trained for another ScanObjectNN-FS split");
}

}  // namespace pcfsl
