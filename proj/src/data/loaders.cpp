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

#include "pcfsl/data/loaders.hpp"

#include <hdf5.h>

#include <algorithm>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <optional>
#include <sstream>

#include "pcfsl/data/mesh.hpp"
#include "pcfsl/rng.hpp"

namespace fs = std::filesystem;

namespace pcfsl {
namespace {

std::string lower_ext(const fs::path& p) { return canonical_class(p.extension().string()); }

std::vector<fs::path> find_files(const fs::path& root, const std::vector<std::string>& exts) {
  std::vector<fs::path> out;
  for (auto it = fs::recursive_directory_iterator(root, fs::directory_options::skip_permission_denied);
       it != fs::recursive_directory_iterator(); ++it) {
    if (!it->is_regular_file()) continue;
    const std::string ext = lower_ext(it->path());
    if (std::find(exts.begin(), exts.end(), ext) != exts.end()) out.push_back(it->path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// First path component of `p` relative to `root`.
std::string top_dir(const fs::path& root, const fs::path& p) {
  const fs::path rel = fs::relative(p, root);
  return rel.begin() == rel.end() ? std::string() : rel.begin()->string();
}

// ---- HDF5 -----------------------------------------------------------------

class H5Handle {
 public:
  using Closer = herr_t (*)(hid_t);
  H5Handle(hid_t id, Closer close) : id_(id), close_(close) {}
  H5Handle(const H5Handle&) = delete;
  H5Handle& operator=(const H5Handle&) = delete;
  ~H5Handle() {
    if (id_ >= 0) close_(id_);
  }
  hid_t get() const { return id_; }
  bool ok() const { return id_ >= 0; }

 private:
  hid_t id_;
  Closer close_;
};

struct H5Array {
  std::vector<hsize_t> dims;
  std::vector<float> values;
};

H5Array read_h5_dataset(hid_t file, const char* name, hid_t mem_type, std::size_t elem_size, const fs::path& path) {
  if (H5Lexists(file, name, H5P_DEFAULT) <= 0) fail(ErrorCode::kFormat, path.string() + ": no dataset '" + name + "'");
  H5Handle ds(H5Dopen2(file, name, H5P_DEFAULT), H5Dclose);
  if (!ds.ok()) fail(ErrorCode::kFormat, path.string() + ": cannot open dataset '" + name + "'");
  H5Handle space(H5Dget_space(ds.get()), H5Sclose);
  const int rank = H5Sget_simple_extent_ndims(space.get());
  if (rank <= 0) fail(ErrorCode::kFormat, path.string() + ": bad rank for '" + name + "'");
  H5Array arr;
  arr.dims.resize(static_cast<std::size_t>(rank));
  H5Sget_simple_extent_dims(space.get(), arr.dims.data(), nullptr);
  std::size_t total = 1;
  for (auto d : arr.dims) total *= d;
  std::vector<unsigned char> raw(total * elem_size);
  if (H5Dread(ds.get(), mem_type, H5S_ALL, H5S_ALL, H5P_DEFAULT, raw.data()) < 0)
    fail(ErrorCode::kFormat, path.string() + ": read failed for '" + name + "'");
  arr.values.resize(total);
  if (mem_type == H5T_NATIVE_FLOAT) {
    std::memcpy(arr.values.data(), raw.data(), raw.size());
  } else {
    const int* ints = reinterpret_cast<const int*>(raw.data());
    for (std::size_t i = 0; i < total; ++i) arr.values[i] = static_cast<float>(ints[i]);
  }
  return arr;
}

/// Reads "data" (N x P x 3 float) and "label" (N or N x 1 integer) from a point
/// cloud HDF5 file. The label callback maps integer labels to class names.
template <typename LabelName>
void read_h5_clouds(const fs::path& path, const fs::path& root, LabelName&& label_name, LoadResult& out) {
  H5Eset_auto2(H5E_DEFAULT, nullptr, nullptr);
  H5Handle file(H5Fopen(path.string().c_str(), H5F_ACC_RDONLY, H5P_DEFAULT), H5Fclose);
  if (!file.ok()) fail(ErrorCode::kFormat, path.string() + ": not a readable HDF5 file");
  const H5Array data = read_h5_dataset(file.get(), "data", H5T_NATIVE_FLOAT, sizeof(float), path);
  const H5Array label = read_h5_dataset(file.get(), "label", H5T_NATIVE_INT, sizeof(int), path);
  if (data.dims.size() != 3 || data.dims[2] < 3)
    fail(ErrorCode::kFormat, path.string() + ": 'data' must be N x P x 3");
  const std::size_t n = data.dims[0], p = data.dims[1], stride = data.dims[2];
  if (label.values.size() != n) fail(ErrorCode::kFormat, path.string() + ": label count does not match data");
  const std::string rel = fs::relative(path, root).generic_string();
  std::vector<LabeledInstance> got;
  got.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    LabeledInstance inst;
    inst.label = label_name(static_cast<int>(label.values[i]), path);
    inst.source_id = rel + "#" + std::to_string(i);
    inst.cloud.points.resize(static_cast<Eigen::Index>(p), 3);
    for (std::size_t k = 0; k < p; ++k)
      for (int c = 0; c < 3; ++c)
        inst.cloud.points(static_cast<Eigen::Index>(k), c) = data.values[(i * p + k) * stride + static_cast<std::size_t>(c)];
    inst.cloud.validate();
    normalize_unit_sphere(inst.cloud);
    got.push_back(std::move(inst));
  }
  std::move(got.begin(), got.end(), std::back_inserter(out.instances));
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

// ---- per-file ingestion ---------------------------------------------------

template <typename Fn>
void guarded(const fs::path& path, LoadResult& out, Fn&& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    out.errors.push_back({path.string(), e.what()});
  }
}

PointCloud read_shape_file(const fs::path& path, const LoadOptions& options, const std::string& source_id) {
  const std::string ext = lower_ext(path);
  PointCloud cloud;
  if (ext == ".off" || ext == ".obj") {
    const TriangleMesh mesh = ext == ".off" ? read_off(path) : read_obj(path);
    Rng rng(derive_seed(options.seed, seed_tag::kIngest, fnv1a(source_id)));
    cloud = sample_surface(mesh, options.surface_points, rng);
  } else {
    cloud = read_xyz(path);
  }
  cloud.validate();
  normalize_unit_sphere(cloud);
  return cloud;
}

void load_modelnet(const fs::path& root, const LoadOptions& options, LoadResult& out) {
  const auto h5 = find_files(root, {".h5"});
  if (!h5.empty()) {
    const auto names_files = find_files(root, {".txt"});
    auto it = std::find_if(names_files.begin(), names_files.end(),
                           [](const fs::path& p) { return p.filename() == "shape_names.txt"; });
    if (it == names_files.end()) fail(ErrorCode::kNotFound, "dataset not found: shape_names.txt missing under " + root.string());
    const auto names = read_lines(*it);
    for (const auto& file : h5) {
      guarded(file, out, [&] {
        read_h5_clouds(file, root,
                       [&](int label, const fs::path& p) {
                         if (label < 0 || label >= static_cast<int>(names.size()))
                           fail(ErrorCode::kFormat, p.string() + ": label " + std::to_string(label) + " out of range");
                         return canonical_class(names[static_cast<std::size_t>(label)]);
                       },
                       out);
      });
    }
    return;
  }
  for (const auto& file : find_files(root, {".off"})) {
    guarded(file, out, [&] {
      LabeledInstance inst;
      inst.source_id = fs::relative(file, root).generic_string();
      inst.label = canonical_class(top_dir(root, file));
      inst.cloud = read_shape_file(file, options, inst.source_id);
      out.instances.push_back(std::move(inst));
    });
  }
}

void load_shapenet(const fs::path& root, const LoadOptions& options, LoadResult& out) {
  std::map<std::string, std::string> by_key;
  for (const auto& c : all_classes(Benchmark::kShapeNet70FS)) {
    by_key[c.name] = c.name;
    by_key[c.id] = c.name;
  }
  for (const auto& file : find_files(root, {".obj", ".off", ".xyz", ".pts"})) {
    guarded(file, out, [&] {
      LabeledInstance inst;
      inst.source_id = fs::relative(file, root).generic_string();
      const std::string dir = canonical_class(top_dir(root, file));
      auto it = by_key.find(dir);
      inst.label = it == by_key.end() ? dir : it->second;
      inst.cloud = read_shape_file(file, options, inst.source_id);
      out.instances.push_back(std::move(inst));
    });
  }
}

/// ScanObjectNN object .bin: float32 point count, then 11 float32 per point
/// (xyz, normal, rgb, instance, semantic).
PointCloud read_scanobject_bin(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  float header = 0;
  if (!in.read(reinterpret_cast<char*>(&header), sizeof header) || !(header >= 1) || header > 1e8f)
    fail(ErrorCode::kFormat, path.string() + ": bad point count");
  const auto n = static_cast<std::size_t>(header);
  std::vector<float> raw(n * 11);
  if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size() * sizeof(float))))
    fail(ErrorCode::kFormat, path.string() + ": truncated");
  PointCloud cloud;
  cloud.points.resize(static_cast<Eigen::Index>(n), 3);
  for (std::size_t i = 0; i < n; ++i)
    for (int c = 0; c < 3; ++c) cloud.points(static_cast<Eigen::Index>(i), c) = raw[i * 11 + static_cast<std::size_t>(c)];
  cloud.validate();
  normalize_unit_sphere(cloud);
  return cloud;
}

void load_scanobjectnn(const fs::path& root, const LoadOptions&, LoadResult& out) {
  auto h5 = find_files(root, {".h5"});
  std::vector<fs::path> hardest;
  std::copy_if(h5.begin(), h5.end(), std::back_inserter(hardest),
               [](const fs::path& p) { return p.filename().string().find("augmentedrot_scale75") != std::string::npos; });
  if (!hardest.empty()) h5 = hardest;
  const auto& names = scanobjectnn_label_names();
  if (!h5.empty()) {
    for (const auto& file : h5) {
      guarded(file, out, [&] {
        read_h5_clouds(file, root,
                       [&](int label, const fs::path& p) {
                         if (label < 0 || label >= static_cast<int>(names.size()))
                           fail(ErrorCode::kFormat, p.string() + ": label " + std::to_string(label) + " out of range");
                         return names[static_cast<std::size_t>(label)];
                       },
                       out);
      });
    }
    return;
  }
  for (const auto& file : find_files(root, {".bin"})) {
    guarded(file, out, [&] {
      LabeledInstance inst;
      inst.source_id = fs::relative(file, root).generic_string();
      inst.label = canonical_class(top_dir(root, file));
      inst.cloud = read_scanobject_bin(file);
      out.instances.push_back(std::move(inst));
    });
  }
}

}  // namespace

const std::vector<std::string>& scanobjectnn_label_names() {
  static const std::vector<std::string> names = {"bag",   "bin",  "box",   "cabinet", "chair",
                                                  "desk",  "display", "door", "shelf", "table",
                                                  "bed",   "pillow", "sink", "sofa",  "toilet"};
  return names;
}

LoadResult load_dataset(const fs::path& root, Benchmark benchmark, const LoadOptions& options) {
  LoadResult out;
  if (benchmark == Benchmark::kToy) {
    out.instances = generate_toy(options.toy);
    return out;
  }
  std::error_code ec;
  if (!fs::is_directory(root, ec)) fail(ErrorCode::kNotFound, "dataset not found: " + root.string());
  switch (benchmark) {
    case Benchmark::kModelNet40FS: load_modelnet(root, options, out); break;
    case Benchmark::kShapeNet70FS: load_shapenet(root, options, out); break;
    case Benchmark::kScanObjectNNFS: load_scanobjectnn(root, options, out); break;
    case Benchmark::kToy: break;
  }
  if (out.instances.empty() && out.errors.empty())
    fail(ErrorCode::kNotFound, "dataset not found: no " + std::string(benchmark_name(benchmark)) + " files under " +
                                   root.string());
  return out;
}

}  // namespace pcfsl
