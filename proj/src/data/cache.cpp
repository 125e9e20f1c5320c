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

#include "pcfsl/data/cache.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace pcfsl {
namespace {

static_assert(std::endian::native == std::endian::little, "cache I/O assumes a little-endian host");

constexpr std::array<char, 8> kMagic = {'P', 'C', 'F', 'S', 'L', 'P', 'T', 'S'};
constexpr const char* kIndexTag = "#pcfsl-cache";

std::string sanitize(std::string s) {
  for (auto& c : s)
    if (c == '\t' || c == '\n' || c == '\r') c = ' ';
  return s;
}

template <typename T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::istream& in, const fs::path& path) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) fail(ErrorCode::kFormat, path.string() + ": truncated header");
  return v;
}

}  // namespace

void write_cache(const fs::path& dir, Benchmark benchmark, const std::vector<LabeledInstance>& instances) {
  fs::create_directories(dir);
  std::uint64_t total = 0;
  for (const auto& inst : instances) total += inst.cloud.size();

  std::ofstream pts(dir / "points.f32", std::ios::binary | std::ios::trunc);
  if (!pts) fail(ErrorCode::kIo, "cannot write " + (dir / "points.f32").string());
  pts.write(kMagic.data(), kMagic.size());
  put(pts, kCacheVersion);
  put(pts, std::uint32_t{0});
  put(pts, total);

  std::ofstream idx(dir / "index.tsv", std::ios::trunc);
  if (!idx) fail(ErrorCode::kIo, "cannot write " + (dir / "index.tsv").string());
  idx << kIndexTag << '\t' << kCacheVersion << '\t' << benchmark_name(benchmark) << '\t' << instances.size() << '\n';

  std::uint64_t offset = 0;
  for (const auto& inst : instances) {
    const auto& p = inst.cloud.points;
    pts.write(reinterpret_cast<const char*>(p.data()), static_cast<std::streamsize>(p.size() * sizeof(float)));
    idx << sanitize(inst.source_id) << '\t' << sanitize(inst.label) << '\t' << offset << '\t' << inst.cloud.size() << '\n';
    offset += inst.cloud.size();
  }
  if (!pts || !idx) fail(ErrorCode::kIo, "write failed under " + dir.string());
}

CacheContents read_cache(const fs::path& dir) {
  const fs::path pts_path = dir / "points.f32", idx_path = dir / "index.tsv";
  if (!fs::exists(pts_path) || !fs::exists(idx_path)) fail(ErrorCode::kNotFound, "no prepared cache under " + dir.string());

  std::ifstream pts(pts_path, std::ios::binary);
  std::array<char, 8> magic{};
  if (!pts.read(magic.data(), magic.size()) || magic != kMagic)
    fail(ErrorCode::kFormat, pts_path.string() + ": not a point cache (bad magic)");
  const auto version = get<std::uint32_t>(pts, pts_path);
  if (version != kCacheVersion)
    fail(ErrorCode::kFormat, pts_path.string() + ": cache version " + std::to_string(version) + ", expected " +
                                 std::to_string(kCacheVersion));
  get<std::uint32_t>(pts, pts_path);
  const auto total = get<std::uint64_t>(pts, pts_path);
  std::vector<float> data(static_cast<std::size_t>(total) * 3);
  if (!pts.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(float))))
    fail(ErrorCode::kFormat, pts_path.string() + ": truncated point data");

  std::ifstream idx(idx_path);
  std::string line;
  if (!std::getline(idx, line)) fail(ErrorCode::kFormat, idx_path.string() + ": empty index");
  std::istringstream header(line);
  std::string tag, bench;
  std::uint32_t idx_version = 0;
  std::size_t count = 0;
  std::getline(header, tag, '\t');
  header >> idx_version;
  header.ignore(1);
  std::getline(header, bench, '\t');
  header >> count;
  if (tag != kIndexTag) fail(ErrorCode::kFormat, idx_path.string() + ": bad index header");
  if (idx_version != kCacheVersion) fail(ErrorCode::kFormat, idx_path.string() + ": index version mismatch");

  CacheContents out;
  out.benchmark = parse_benchmark(bench);
  out.instances.reserve(count);
  while (std::getline(idx, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    LabeledInstance inst;
    std::string off_s, cnt_s;
    if (!std::getline(row, inst.source_id, '\t') || !std::getline(row, inst.label, '\t') ||
        !std::getline(row, off_s, '\t') || !std::getline(row, cnt_s))
      fail(ErrorCode::kFormat, idx_path.string() + ": bad index row");
    const std::uint64_t offset = std::stoull(off_s), n = std::stoull(cnt_s);
    if (n == 0 || offset + n > total) fail(ErrorCode::kFormat, idx_path.string() + ": index row out of range");
    inst.cloud.points.resize(static_cast<Eigen::Index>(n), 3);
    std::memcpy(inst.cloud.points.data(), data.data() + offset * 3, n * 3 * sizeof(float));
    out.instances.push_back(std::move(inst));
  }
  if (out.instances.size() != count) fail(ErrorCode::kFormat, idx_path.string() + ": instance count mismatch");
  return out;
}

PrepareSummary prepare_data(const fs::path& root, Benchmark benchmark, const fs::path& out_dir,
                            const LoadOptions& options) {
  LoadResult loaded = load_dataset(root, benchmark, options);
  PrepareSummary s;
  s.benchmark = benchmark;
  s.errors = std::move(loaded.errors);
  s.instances = loaded.instances.size();
  write_cache(out_dir, benchmark, loaded.instances);
  for (const auto& inst : loaded.instances) ++s.per_class[canonical_class(inst.label)];
  const PartitionedInstances parts = build_split(std::move(loaded.instances), benchmark, 0);
  s.train_instances = parts.train.size();
  s.test_instances = parts.test.size();
  for (const auto& c : parts.split.train_classes) s.train_classes += s.per_class.count(c);
  for (const auto& c : parts.split.test_classes) s.test_classes += s.per_class.count(c);
  s.ignored_classes = parts.ignored_classes;
  return s;
}

}  // namespace pcfsl
