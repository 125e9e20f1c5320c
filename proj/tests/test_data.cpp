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
#include <hdf5.h>

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

#include "pcfsl/data/benchmark.hpp"
#include "pcfsl/data/cache.hpp"
#include "pcfsl/data/episode.hpp"
#include "pcfsl/data/loaders.hpp"
#include "pcfsl/data/mesh.hpp"
#include "pcfsl/data/sampling.hpp"
#include "pcfsl/data/toy.hpp"
#include "test_util.hpp"

namespace pcfsl {
namespace {

using test::TempDir;
using test::write_text;

PointCloud random_cloud(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  PointCloud c;
  c.points = test::gaussian(static_cast<Eigen::Index>(n), 3, rng).cast<float>();
  return c;
}

using Row = std::tuple<float, float, float>;

std::multiset<Row> rows_of(const PointCloud& c) {
  std::multiset<Row> out;
  for (Eigen::Index i = 0; i < c.points.rows(); ++i) out.insert({c.points(i, 0), c.points(i, 1), c.points(i, 2)});
  return out;
}

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return static_cast<ErrorCode>(0);
}

const char* kTetrahedron =
    "OFF\n# comment\n4 4 0\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n3 0 1 2\n3 0 1 3\n3 0 2 3\n3 1 2 3\n";

// ---------------------------------------------------------------- point cloud

TEST(PointCloud, ValidateRejectsEmptyAndNonFinite) {
  PointCloud empty;
  EXPECT_EQ(code_of([&] { empty.validate(); }), ErrorCode::kInvalidArgument);
  PointCloud bad = random_cloud(4, 1);
  bad.points(2, 1) = std::numeric_limits<float>::quiet_NaN();
  EXPECT_EQ(code_of([&] { bad.validate(); }), ErrorCode::kInvalidArgument);
  EXPECT_NO_THROW(random_cloud(1, 2).validate());
}

TEST(PointCloud, NormalizeCentersAndScalesToUnitSphere) {
  PointCloud c = random_cloud(100, 3);
  c.points.array() += 5.0f;
  normalize_unit_sphere(c);
  const Eigen::RowVector3f centroid = c.points.colwise().mean();
  EXPECT_LT(centroid.norm(), 1e-5f);
  EXPECT_NEAR(c.points.rowwise().norm().maxCoeff(), 1.0f, 1e-6f);
}

// ---------------------------------------------------------------- mesh files

TEST(Mesh, ReadsOffWithComments) {
  TempDir dir;
  write_text(dir / "t.off", kTetrahedron);
  const TriangleMesh m = read_off(dir / "t.off");
  EXPECT_EQ(m.vertices.size(), 4u);
  EXPECT_EQ(m.faces.size(), 4u);
}

TEST(Mesh, ReadsGluedOffHeaderAndFanTriangulates) {
  TempDir dir;
  write_text(dir / "q.off", "OFF4 1 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n");
  const TriangleMesh m = read_off(dir / "q.off");
  ASSERT_EQ(m.faces.size(), 2u);
  EXPECT_EQ(m.faces[1], (std::array<int, 3>{0, 2, 3}));
}

TEST(Mesh, RejectsBrokenOff) {
  TempDir dir;
  write_text(dir / "a.off", "PLY\n");
  write_text(dir / "b.off", "OFF\n4 1 0\n0 0 0\n1 0 0\n");
  write_text(dir / "c.off", "OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 7\n");
  for (const char* name : {"a.off", "b.off", "c.off"})
    EXPECT_EQ(code_of([&] { read_off(dir / name); }), ErrorCode::kFormat) << name;
  EXPECT_EQ(code_of([&] { read_off(dir / "missing.off"); }), ErrorCode::kIo);
}

TEST(Mesh, ReadsObjWithSlashAndNegativeIndices) {
  TempDir dir;
  write_text(dir / "m.obj", "v 0 0 0\nv 1 0 0\nv 0 1 0\nvn 0 0 1\nf 1/1/1 2/2/1 3/3/1\nf -3 -2 -1\n");
  const TriangleMesh m = read_obj(dir / "m.obj");
  ASSERT_EQ(m.faces.size(), 2u);
  EXPECT_EQ(m.faces[0], m.faces[1]);
}

TEST(Mesh, ReadsCommaSeparatedXyz) {
  TempDir dir;
  write_text(dir / "p.xyz", "0,0,0\n1 2 3 9 9\n# note\n4,5,6\n");
  const PointCloud c = read_xyz(dir / "p.xyz");
  ASSERT_EQ(c.size(), 3u);
  EXPECT_FLOAT_EQ(c.points(1, 2), 3.0f);
}

TEST(Mesh, SurfaceSamplesLieOnTheMesh) {
  TriangleMesh m;
  m.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  m.faces = {{0, 1, 2}};
  Rng a(5), b(5);
  const PointCloud c = sample_surface(m, 500, a);
  EXPECT_EQ(c.points, sample_surface(m, 500, b).points);
  for (Eigen::Index i = 0; i < c.points.rows(); ++i) {
    EXPECT_FLOAT_EQ(c.points(i, 2), 0.0f);
    EXPECT_GE(c.points(i, 0), -1e-6f);
    EXPECT_GE(c.points(i, 1), -1e-6f);
    EXPECT_LE(c.points(i, 0) + c.points(i, 1), 1.0f + 1e-6f);
  }
}

// ---------------------------------------------------------------- loaders

void write_h5(const std::filesystem::path& path, const std::vector<float>& data, std::size_t n, std::size_t p,
              const std::vector<int>& labels) {
  std::filesystem::create_directories(path.parent_path());
  const hid_t file = H5Fcreate(path.string().c_str(), H5F_ACC_TRUNC, H5P_DEFAULT, H5P_DEFAULT);
  const hsize_t ddims[3] = {n, p, 3};
  hid_t space = H5Screate_simple(3, ddims, nullptr);
  hid_t ds = H5Dcreate2(file, "data", H5T_IEEE_F32LE, space, H5P_DEFAULT, H5P_DEFAULT, H5P_DEFAULT);
  H5Dwrite(ds, H5T_NATIVE_FLOAT, H5S_ALL, H5S_ALL, H5P_DEFAULT, data.data());
  H5Dclose(ds);
  H5Sclose(space);
  const hsize_t ldims[2] = {n, 1};
  space = H5Screate_simple(2, ldims, nullptr);
  ds = H5Dcreate2(file, "label", H5T_STD_U8LE, space, H5P_DEFAULT, H5P_DEFAULT, H5P_DEFAULT);
  H5Dwrite(ds, H5T_NATIVE_INT, H5S_ALL, H5S_ALL, H5P_DEFAULT, labels.data());
  H5Dclose(ds);
  H5Sclose(space);
  H5Fclose(file);
}

std::vector<float> random_points(std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<float> d;
  std::vector<float> v(count * 3);
  for (auto& x : v) x = d(rng);
  return v;
}

TEST(Loaders, EmptyDirectoryIsNotFound) {
  TempDir dir;
  try {
    load_dataset(dir.path(), Benchmark::kModelNet40FS);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNotFound);
    EXPECT_NE(std::string(e.what()).find("dataset not found"), std::string::npos);
  }
  EXPECT_EQ(code_of([&] { load_dataset(dir / "nope", Benchmark::kShapeNet70FS); }), ErrorCode::kNotFound);
}

TEST(Loaders, CorruptFileIsReportedAndSkipped) {
  TempDir dir;
  write_text(dir / "chair/train/chair_0001.off", kTetrahedron);
  write_text(dir / "chair/train/chair_0002.off", "OFF\n3 1 0\n0 0\n");
  LoadOptions opt;
  opt.surface_points = 64;
  const LoadResult r = load_dataset(dir.path(), Benchmark::kModelNet40FS, opt);
  ASSERT_EQ(r.instances.size(), 1u);
  ASSERT_EQ(r.errors.size(), 1u);
  EXPECT_EQ(r.instances[0].label, "chair");
  EXPECT_EQ(r.instances[0].cloud.size(), 64u);
  EXPECT_NE(r.errors[0].path.find("chair_0002"), std::string::npos);
}

TEST(Loaders, MeshIngestionIsSeededPerFile) {
  TempDir dir;
  write_text(dir / "cone/train/a.off", kTetrahedron);
  write_text(dir / "cone/test/b.off", kTetrahedron);
  LoadOptions opt;
  opt.surface_points = 32;
  const LoadResult a = load_dataset(dir.path(), Benchmark::kModelNet40FS, opt);
  const LoadResult b = load_dataset(dir.path(), Benchmark::kModelNet40FS, opt);
  ASSERT_EQ(a.instances.size(), 2u);
  EXPECT_EQ(a.instances[0].cloud.points, b.instances[0].cloud.points);
  EXPECT_NE(a.instances[0].cloud.points, a.instances[1].cloud.points);
}

TEST(Loaders, ModelNetHdf5Release) {
  TempDir dir;
  write_text(dir / "modelnet40_ply_hdf5_2048/shape_names.txt", "airplane\nbookshelf\nchair\n");
  write_h5(dir / "modelnet40_ply_hdf5_2048/ply_data_train0.h5", random_points(3 * 16, 1), 3, 16, {0, 2, 2});
  write_h5(dir / "modelnet40_ply_hdf5_2048/ply_data_test0.h5", random_points(2 * 16, 2), 2, 16, {1, 9});
  const LoadResult r = load_dataset(dir.path(), Benchmark::kModelNet40FS);
  ASSERT_EQ(r.instances.size(), 3u);
  ASSERT_EQ(r.errors.size(), 1u);
  std::map<std::string, int> counts;
  for (const auto& inst : r.instances) {
    ++counts[inst.label];
    EXPECT_EQ(inst.cloud.size(), 16u);
    EXPECT_NEAR(inst.cloud.points.rowwise().norm().maxCoeff(), 1.0f, 1e-5f);
  }
  EXPECT_EQ(counts["chair"], 2);
  EXPECT_EQ(counts["airplane"], 1);
}

TEST(Loaders, ModelNetHdf5WithoutNamesIsNotFound) {
  TempDir dir;
  write_h5(dir / "ply_data_train0.h5", random_points(16, 1), 1, 16, {0});
  EXPECT_EQ(code_of([&] { load_dataset(dir.path(), Benchmark::kModelNet40FS); }), ErrorCode::kNotFound);
}

TEST(Loaders, NonHdf5BytesAreAFileError) {
  TempDir dir;
  write_text(dir / "shape_names.txt", "chair\n");
  write_text(dir / "ply_data_train0.h5", "this is not hdf5");
  const LoadResult r = load_dataset(dir.path(), Benchmark::kModelNet40FS);
  EXPECT_TRUE(r.instances.empty());
  ASSERT_EQ(r.errors.size(), 1u);
}

TEST(Loaders, ScanObjectNNPrefersHardestVariant) {
  TempDir dir;
  write_h5(dir / "main_split/training_objectdataset.h5", random_points(16, 1), 1, 16, {0});
  write_h5(dir / "main_split/training_objectdataset_augmentedrot_scale75.h5", random_points(2 * 16, 2), 2, 16, {8, 7});
  const LoadResult r = load_dataset(dir.path(), Benchmark::kScanObjectNNFS);
  ASSERT_EQ(r.instances.size(), 2u);
  EXPECT_EQ(r.instances[0].label, "shelf");
  EXPECT_EQ(r.instances[1].label, "door");
}

TEST(Loaders, ScanObjectNNObjectBins) {
  TempDir dir;
  std::filesystem::create_directories(dir / "bag");
  std::vector<float> raw = {5.0f};
  const auto pts = random_points(5 * 11 / 3 + 1, 3);
  raw.insert(raw.end(), pts.begin(), pts.begin() + 55);
  std::ofstream(dir / "bag/001.bin", std::ios::binary).write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size() * 4));
  std::ofstream(dir / "bag/002.bin", std::ios::binary).write(reinterpret_cast<const char*>(raw.data()), 20);
  const LoadResult r = load_dataset(dir.path(), Benchmark::kScanObjectNNFS);
  ASSERT_EQ(r.instances.size(), 1u);
  EXPECT_EQ(r.instances[0].cloud.size(), 5u);
  EXPECT_EQ(r.errors.size(), 1u);
}

TEST(Loaders, ShapeNetResolvesSynsetDirectories) {
  TempDir dir;
  write_text(dir / "03211117/model_a/model.obj", "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n");
  write_text(dir / "sofa/x.xyz", "0 0 0\n1 1 1\n2 0 1\n");
  LoadOptions opt;
  opt.surface_points = 20;
  const LoadResult r = load_dataset(dir.path(), Benchmark::kShapeNet70FS, opt);
  std::set<std::string> labels;
  for (const auto& i : r.instances) labels.insert(i.label);
  EXPECT_EQ(labels, (std::set<std::string>{"display", "sofa"}));
}

// ---------------------------------------------------------------- splits

std::size_t expected_total(const std::vector<ClassInfo>& infos) {
  std::size_t n = 0;
  for (const auto& c : infos) n += c.expected;
  return n;
}

TEST(Benchmark, ShippedClassTables) {
  const ClassTable mn = class_table(Benchmark::kModelNet40FS);
  EXPECT_EQ(mn.train.size(), 30u);
  EXPECT_EQ(mn.test.size(), 10u);
  EXPECT_EQ(expected_total(mn.train), 9204u);
  EXPECT_EQ(expected_total(mn.test), 3104u);
  const ClassTable sn = class_table(Benchmark::kShapeNet70FS);
  EXPECT_EQ(sn.train.size(), 50u);
  EXPECT_EQ(sn.test.size(), 20u);
  for (int fold = 0; fold < 3; ++fold) {
    const ClassTable so = class_table(Benchmark::kScanObjectNNFS, fold);
    EXPECT_EQ(so.train.size(), 10u);
    EXPECT_EQ(so.test.size(), 5u);
  }
  EXPECT_EQ(fold_count(Benchmark::kScanObjectNNFS), 3);
  EXPECT_EQ(fold_count(Benchmark::kModelNet40FS), 5);
}

std::size_t expected_of(const std::vector<ClassInfo>& infos, const std::string& name) {
  for (const auto& c : infos)
    if (c.name == name) return c.expected;
  return 0;
}

TEST(Benchmark, PublishedClassCounts) {
  const ClassTable mn = class_table(Benchmark::kModelNet40FS);
  EXPECT_EQ(expected_of(mn.train, "chair"), 989u);
  EXPECT_EQ(expected_of(mn.test, "bookshelf"), 672u);
  EXPECT_EQ(expected_total(mn.train) + expected_total(mn.test), 12308u);
  const ClassTable sn = class_table(Benchmark::kShapeNet70FS);
  EXPECT_EQ(expected_total(sn.train), 21722u);
  EXPECT_EQ(expected_total(sn.test), 8351u);
  // Per-class counts of the three held-out splits; their sum is the full dataset.
  const std::size_t held_out[3] = {4340, 5169, 4789};
  for (int fold = 0; fold < 3; ++fold) {
    const ClassTable so = class_table(Benchmark::kScanObjectNNFS, fold);
    EXPECT_EQ(expected_total(so.test), held_out[fold]) << fold;
    EXPECT_EQ(expected_total(so.train) + expected_total(so.test), 14298u) << fold;
  }
}

TEST(Benchmark, NamesAndAliases) {
  EXPECT_EQ(parse_benchmark("modelnet40"), Benchmark::kModelNet40FS);
  EXPECT_EQ(parse_benchmark("ScanObjectNN-FS"), Benchmark::kScanObjectNNFS);
  EXPECT_EQ(parse_benchmark("TOY"), Benchmark::kToy);
  EXPECT_THROW(parse_benchmark("cifar"), Error);
  EXPECT_EQ(canonical_class("Night Stand"), "night_stand");
  EXPECT_EQ(canonical_class("tv-stand"), "tv_stand");
}

TEST(Benchmark, SplitsAreDisjoint) {
  for (Benchmark b : {Benchmark::kModelNet40FS, Benchmark::kShapeNet70FS, Benchmark::kScanObjectNNFS, Benchmark::kToy})
    for (int fold = 0; fold < (b == Benchmark::kScanObjectNNFS ? 3 : 1); ++fold) {
      const BenchmarkSplit s = make_split(b, fold);
      std::set<std::string> all(s.train_classes.begin(), s.train_classes.end());
      for (const auto& c : s.test_classes) EXPECT_TRUE(all.insert(c).second) << benchmark_name(b) << " " << c;
    }
}

TEST(Benchmark, ScanObjectNNFoldsRotateTheHeldOutClasses) {
  const BenchmarkSplit s0 = make_split(Benchmark::kScanObjectNNFS, 0);
  const std::set<std::string> expected{"shelf", "door", "bin", "box", "bag"};
  EXPECT_EQ(std::set<std::string>(s0.test_classes.begin(), s0.test_classes.end()), expected);
  std::set<std::string> held_out;
  for (int fold = 0; fold < 3; ++fold)
    for (const auto& c : make_split(Benchmark::kScanObjectNNFS, fold).test_classes) held_out.insert(c);
  EXPECT_EQ(held_out.size(), 15u);
  EXPECT_THROW(make_split(Benchmark::kScanObjectNNFS, 3), Error);
}

std::vector<LabeledInstance> labeled(const std::vector<std::pair<std::string, int>>& counts) {
  std::vector<LabeledInstance> out;
  for (const auto& [label, n] : counts)
    for (int i = 0; i < n; ++i) {
      LabeledInstance inst;
      inst.label = label;
      inst.source_id = label + "/" + std::to_string(i);
      inst.cloud = random_cloud(4, out.size());
      out.push_back(std::move(inst));
    }
  return out;
}

TEST(Benchmark, BuildSplitPartitionsByClassList) {
  const auto r = build_split(labeled({{"chair", 7}, {"bookshelf", 3}, {"spaceship", 2}}), Benchmark::kModelNet40FS, 0);
  EXPECT_EQ(r.train.size(), 7u);
  EXPECT_EQ(r.test.size(), 3u);
  EXPECT_EQ(r.ignored_classes, (std::vector<std::string>{"spaceship"}));
  for (const auto& i : r.train) EXPECT_EQ(i.label, "chair");
  for (const auto& i : r.test) EXPECT_EQ(i.label, "bookshelf");
}

TEST(Benchmark, SingleTrainClassLeavesTestEmpty) {
  const auto r = build_split(labeled({{"sofa", 5}}), Benchmark::kModelNet40FS, 0);
  EXPECT_EQ(r.train.size(), 5u);
  EXPECT_TRUE(r.test.empty());
}

TEST(Benchmark, FoldPartitionIsNearEvenPerClass) {
  const auto instances = labeled({{"a", 23}, {"b", 9}, {"c", 5}, {"d", 1}});
  const auto folds = partition_folds(instances, 5, 11);
  ASSERT_EQ(folds.size(), 5u);
  std::vector<std::size_t> seen;
  for (const auto& f : folds) seen.insert(seen.end(), f.begin(), f.end());
  std::sort(seen.begin(), seen.end());
  std::vector<std::size_t> all(instances.size());
  std::iota(all.begin(), all.end(), 0);
  EXPECT_EQ(seen, all);
  for (const std::string label : {"a", "b", "c", "d"}) {
    std::vector<std::size_t> sizes;
    for (const auto& f : folds)
      sizes.push_back(static_cast<std::size_t>(std::count_if(f.begin(), f.end(), [&](std::size_t i) { return instances[i].label == label; })));
    EXPECT_LE(*std::max_element(sizes.begin(), sizes.end()) - *std::min_element(sizes.begin(), sizes.end()), 1u) << label;
  }
  EXPECT_EQ(folds, partition_folds(instances, 5, 11));
  EXPECT_NE(folds, partition_folds(instances, 5, 12));
}

// ---------------------------------------------------------------- sampling

TEST(Sampling, DownsamplesWithoutReplacement) {
  const PointCloud c = random_cloud(2048, 4);
  Rng rng(1);
  const PointCloud s = sample_points(c, 512, rng);
  ASSERT_EQ(s.size(), 512u);
  const auto src = rows_of(c);
  const auto picked = rows_of(s);
  EXPECT_EQ(std::set<Row>(picked.begin(), picked.end()).size(), 512u);
  for (const auto& p : picked) EXPECT_TRUE(src.count(p));
}

TEST(Sampling, SameSizeIsAPermutation) {
  const PointCloud c = random_cloud(512, 5);
  Rng rng(2);
  EXPECT_EQ(rows_of(sample_points(c, 512, rng)), rows_of(c));
}

TEST(Sampling, UndersizedCloudsFallBackToReplacement) {
  const PointCloud c = random_cloud(100, 6);
  Rng rng(3);
  const PointCloud s = sample_points(c, 512, rng);
  ASSERT_EQ(s.size(), 512u);
  const auto src = rows_of(c);
  for (const auto& p : rows_of(s)) EXPECT_TRUE(src.count(p));
}

TEST(Sampling, FixedSeedIsBitReproducible) {
  const PointCloud c = random_cloud(300, 7);
  Rng a(42), b(42);
  EXPECT_EQ(sample_points(c, 128, a).points, sample_points(c, 128, b).points);
}

TEST(Augment, NoOpParametersReturnTheInput) {
  const PointCloud c = random_cloud(64, 8);
  Rng rng(1);
  EXPECT_EQ(augment(c, {0.0, 0.05, false}, rng).points, c.points);
}

TEST(Augment, JitterIsClipped) {
  const PointCloud c = random_cloud(2000, 9);
  Rng rng(2);
  const AugmentParams p{0.5, 0.05, false};
  const PointCloud out = augment(c, p, rng);
  const float bound = std::sqrt(3.0f) * 0.05f + 1e-6f;
  for (Eigen::Index i = 0; i < c.points.rows(); ++i) EXPECT_LE((out.points.row(i) - c.points.row(i)).norm(), bound);
}

TEST(Augment, RotationIsAboutTheUpAxisAndDeterministic) {
  const PointCloud c = random_cloud(50, 10);
  Rng a(3), b(3);
  const AugmentParams p{0.0, 0.05, true};
  const PointCloud x = augment(c, p, a);
  EXPECT_EQ(x.points, augment(c, p, b).points);
  for (Eigen::Index i = 0; i < c.points.rows(); ++i) {
    EXPECT_FLOAT_EQ(x.points(i, 1), c.points(i, 1));
    EXPECT_NEAR(x.points.row(i).norm(), c.points.row(i).norm(), 1e-5f);
  }
}

// ---------------------------------------------------------------- episodes

TEST(Episode, SizesFollowTheSpec) {
  const auto instances = labeled({{"a", 30}, {"b", 30}, {"c", 30}, {"d", 30}, {"e", 30}, {"f", 30}});
  const ClassPool pool = make_pool(instances);
  Rng rng(1);
  const Episode one = sample_episode(pool, {5, 1, 15}, rng);
  EXPECT_EQ(one.support.size(), 5u);
  EXPECT_EQ(one.query.size(), 75u);
  const Episode five = sample_episode(pool, {5, 5, 15}, rng);
  EXPECT_EQ(five.support.size(), 25u);
  EXPECT_EQ(five.query.size(), 75u);
  for (std::size_t i = 0; i < five.support.size(); ++i) {
    EXPECT_EQ(five.support_labels[i], static_cast<int>(i / 5));
    EXPECT_EQ(instances[five.support[i]].label, five.class_map[static_cast<std::size_t>(five.support_labels[i])]);
  }
  std::set<std::size_t> s(five.support.begin(), five.support.end());
  for (auto q : five.query) EXPECT_FALSE(s.count(q));
}

TEST(Episode, SameSeedSameEpisode) {
  const ClassPool pool = make_pool(labeled({{"a", 20}, {"b", 20}, {"c", 20}, {"d", 20}, {"e", 20}}));
  Rng a(77), b(77);
  const Episode x = sample_episode(pool, {5, 1, 15}, a), y = sample_episode(pool, {5, 1, 15}, b);
  EXPECT_EQ(x.support, y.support);
  EXPECT_EQ(x.query, y.query);
  EXPECT_EQ(x.class_map, y.class_map);
}

TEST(Episode, UndersizedClassesAreRedrawnThenFail) {
  const auto instances = labeled({{"a", 20}, {"b", 20}, {"c", 20}, {"d", 20}, {"e", 20}, {"tiny", 3}});
  Rng rng(2);
  for (int i = 0; i < 20; ++i)
    for (const auto& c : sample_episode(make_pool(instances), {5, 1, 15}, rng).class_map) EXPECT_NE(c, "tiny");
  const ClassPool small = make_pool(labeled({{"a", 20}, {"b", 20}, {"c", 20}, {"d", 20}, {"e", 4}}));
  EXPECT_EQ(code_of([&] { sample_episode(small, {5, 1, 15}, rng); }), ErrorCode::kConfig);
  EXPECT_EQ(code_of([&] { sample_episode(small, {6, 1, 1}, rng); }), ErrorCode::kConfig);
  EXPECT_EQ(code_of([&] { EpisodeSpec{1, 1, 1}.validate(); }), ErrorCode::kConfig);
}

TEST(Episode, PoolSubsetRestrictsMembers) {
  const auto instances = labeled({{"b", 3}, {"a", 3}});
  const std::vector<std::size_t> subset = {0, 4};
  const ClassPool pool = make_pool(instances, &subset);
  ASSERT_EQ(pool.classes, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(pool.members[0], (std::vector<std::size_t>{4}));
  EXPECT_EQ(pool.members[1], (std::vector<std::size_t>{0}));
}

// ---------------------------------------------------------------- cache

TEST(Cache, RoundTripPreservesEverything) {
  TempDir dir;
  auto instances = labeled({{"a", 3}, {"b", 2}});
  instances[1].cloud = random_cloud(17, 99);
  write_cache(dir / "c", Benchmark::kScanObjectNNFS, instances);
  const CacheContents back = read_cache(dir / "c");
  EXPECT_EQ(back.benchmark, Benchmark::kScanObjectNNFS);
  ASSERT_EQ(back.instances.size(), instances.size());
  for (std::size_t i = 0; i < instances.size(); ++i) {
    EXPECT_EQ(back.instances[i].label, instances[i].label);
    EXPECT_EQ(back.instances[i].source_id, instances[i].source_id);
    EXPECT_EQ(back.instances[i].cloud.points, instances[i].cloud.points);
  }
}

TEST(Cache, DetectsMissingAndCorruptFiles) {
  TempDir dir;
  EXPECT_EQ(code_of([&] { read_cache(dir / "none"); }), ErrorCode::kNotFound);
  write_cache(dir / "c", Benchmark::kToy, labeled({{"a", 2}}));
  const auto pts = dir / "c" / "points.f32";
  std::filesystem::resize_file(pts, std::filesystem::file_size(pts) - 8);
  EXPECT_EQ(code_of([&] { read_cache(dir / "c"); }), ErrorCode::kFormat);
  write_cache(dir / "d", Benchmark::kToy, labeled({{"a", 2}}));
  {
    std::fstream f(dir / "d" / "points.f32", std::ios::in | std::ios::out | std::ios::binary);
    f.write("XXXXXXXX", 8);
  }
  EXPECT_EQ(code_of([&] { read_cache(dir / "d"); }), ErrorCode::kFormat);
}

TEST(Cache, PrepareToyReportsSplitCounts) {
  TempDir dir;
  LoadOptions opt;
  opt.toy.instances_per_class = 6;
  opt.toy.points_per_instance = 32;
  const PrepareSummary s = prepare_data("", Benchmark::kToy, dir / "toy", opt);
  EXPECT_EQ(s.instances, 60u);
  EXPECT_EQ(s.train_classes, 5u);
  EXPECT_EQ(s.test_classes, 5u);
  EXPECT_EQ(s.train_instances, 30u);
  EXPECT_EQ(read_cache(dir / "toy").instances.size(), 60u);
}

// ---------------------------------------------------------------- toy

TEST(Toy, TenNormalizedClassesDeterministically) {
  ToyParams p;
  p.instances_per_class = 4;
  p.points_per_instance = 100;
  const auto a = generate_toy(p), b = generate_toy(p);
  ASSERT_EQ(a.size(), 40u);
  std::set<std::string> labels;
  for (std::size_t i = 0; i < a.size(); ++i) {
    labels.insert(a[i].label);
    EXPECT_EQ(a[i].cloud.points, b[i].cloud.points);
    EXPECT_EQ(a[i].cloud.size(), 100u);
    EXPECT_NEAR(a[i].cloud.points.rowwise().norm().maxCoeff(), 1.0f, 1e-5f);
  }
  EXPECT_EQ(labels.size(), 10u);
  const BenchmarkSplit s = make_split(Benchmark::kToy, 0);
  for (const auto& c : s.train_classes) EXPECT_TRUE(labels.count(c));
  for (const auto& c : s.test_classes) EXPECT_TRUE(labels.count(c));
  p.seed = 8;
  EXPECT_NE(generate_toy(p)[0].cloud.points, a[0].cloud.points);
}

}  // namespace
}  // namespace pcfsl
