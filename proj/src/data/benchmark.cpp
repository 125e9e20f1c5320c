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

#include "pcfsl/data/benchmark.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>

#include "pcfsl/rng.hpp"

namespace pcfsl {
namespace {

const std::vector<ClassInfo> kModelNetTrain = {
    {"chair", "", 989},    {"sofa", "", 780},       {"airplane", "", 725}, {"bed", "", 615},
    {"monitor", "", 565},  {"table", "", 492},      {"toilet", "", 444},   {"mantel", "", 384},
    {"tv_stand", "", 367}, {"plant", "", 339},      {"car", "", 297},      {"desk", "", 286},
    {"dresser", "", 286},  {"glass_box", "", 271},  {"guitar", "", 255},   {"bench", "", 193},
    {"cone", "", 187},     {"tent", "", 183},       {"laptop", "", 169},   {"curtain", "", 157},
    {"radio", "", 124},    {"xbox", "", 123},       {"bathtub", "", 156},  {"lamp", "", 144},
    {"stairs", "", 144},   {"door", "", 129},       {"stool", "", 110},    {"wardrobe", "", 107},
    {"cup", "", 99},       {"bowl", "", 84},
};

const std::vector<ClassInfo> kModelNetTest = {
    {"bookshelf", "", 672},   {"vase", "", 575},       {"bottle", "", 435},     {"piano", "", 331},
    {"night_stand", "", 286}, {"range_hood", "", 215}, {"flower_pot", "", 169}, {"keyboard", "", 165},
    {"sink", "", 148},        {"person", "", 108},
};

const std::vector<ClassInfo> kShapeNetTrain = {
    {"sofa", "04256520", 1520},         {"race_car", "04037443", 323},
    {"desk", "03179701", 1226},         {"garage_cabinet", "20000011", 307},
    {"phone", "04401088", 1089},        {"handgun", "03948459", 307},
    {"armchair", "02738535", 1051},     {"sport_utility", "04285965", 300},
    {"bus", "02924116", 939},           {"piano", "03928116", 239},
    {"bathtub", "02808440", 856},       {"bed", "02818832", 233},
    {"radiotelephone", "02992529", 831}, {"stove", "04330267", 218},
    {"park_bench", "03891251", 823},    {"convertible", "03100240", 208},
    {"coffee_table", "03063968", 763},  {"sports_car", "04285008", 197},
    {"club_chair", "20000027", 748},    {"bowl", "02880940", 186},
    {"boat", "02858304", 741},          {"cruiser", "03141065", 181},
    {"sniper_rifle", "04250224", 717},  {"carbine", "02961451", 172},
    {"clock", "03046257", 651},         {"printer", "04004475", 166},
    {"pot", "03991062", 602},           {"microwave", "03761084", 152},
    {"jar", "03593526", 596},           {"skateboard", "04225987", 152},
    {"dresser", "03237340", 482},       {"tower", "04460130", 133},
    {"table_lamp", "04380533", 464},    {"cantilever_chair", "20000020", 125},
    {"laptop", "03642806", 460},        {"basket", "02801938", 113},
    {"sedan", "04166281", 429},         {"beach_wagon", "02814533", 108},
    {"knife", "03624134", 424},         {"can", "02946921", 108},
    {"rectangular_table", "20000037", 421}, {"pillow", "03938244", 96},
    {"coupe", "03119396", 418},         {"jeep", "03594945", 95},
    {"swivel_chair", "04373704", 398},  {"dishwasher", "03207941", 93},
    {"desk_cabinet", "20000010", 356},  {"rocket", "04099429", 85},
    {"motorcycle", "03790512", 337},    {"bag", "02773838", 83},
};

const std::vector<ClassInfo> kShapeNetTest = {
    {"display", "03211117", 1093},  {"file_cabinet", "03337140", 298},
    {"airline", "02690373", 1054},  {"swept_wing", "20000001", 271},
    {"guitar", "03467517", 797},    {"mug", "03797390", 214},
    {"faucet", "03325088", 744},    {"washer", "04554684", 169},
    {"jet", "03595860", 675},       {"helmet", "03513137", 162},
    {"fighter", "03335030", 597},   {"propeller_plane", "04012084", 137},
    {"bottle", "02876657", 498},    {"bomber", "02867715", 130},
    {"bookshelf", "02871439", 452}, {"delta_wing", "03174079", 121},
    {"train", "04468005", 389},     {"camera", "02942699", 113},
    {"ashcan", "02747177", 343},    {"mailbox", "03710193", 94},
};

const std::vector<ClassInfo> kScanObjectSplits[3] = {
    {{"shelf", "", 1325}, {"door", "", 1102}, {"bin", "", 993}, {"box", "", 539}, {"bag", "", 381}},
    {{"chair", "", 1975}, {"sofa", "", 1268}, {"desk", "", 742}, {"bed", "", 674}, {"pillow", "", 510}},
    {{"cabinet", "", 1716}, {"table", "", 1192}, {"display", "", 882}, {"sink", "", 589}, {"toilet", "", 410}},
};

const std::vector<ClassInfo> kToyTrain = {
    {"sphere_a", "", 0}, {"cube_a", "", 0}, {"cylinder_a", "", 0}, {"cone_a", "", 0}, {"torus_a", "", 0},
};
const std::vector<ClassInfo> kToyTest = {
    {"sphere_b", "", 0}, {"cube_b", "", 0}, {"cylinder_b", "", 0}, {"cone_b", "", 0}, {"torus_b", "", 0},
};

std::vector<std::string> names_of(const std::vector<ClassInfo>& infos) {
  std::vector<std::string> out;
  out.reserve(infos.size());
  for (const auto& c : infos) out.push_back(c.name);
  return out;
}

void check_fold(Benchmark b, int fold) {
  if (fold < 0 || fold >= fold_count(b))
    fail(ErrorCode::kConfig, "fold " + std::to_string(fold) + " out of range for " + std::string(benchmark_name(b)));
}

}  // namespace

std::string_view benchmark_name(Benchmark b) {
  switch (b) {
    case Benchmark::kModelNet40FS: return "ModelNet40-FS";
    case Benchmark::kShapeNet70FS: return "ShapeNet70-FS";
    case Benchmark::kScanObjectNNFS: return "ScanObjectNN-FS";
    case Benchmark::kToy: return "Toy-FS";
  }
  return "?";
}

std::string canonical_class(std::string_view name) {
  std::string out;
  out.reserve(name.size());
  for (char c : name) {
    if (c == ' ' || c == '-') out.push_back('_');
    else out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

Benchmark parse_benchmark(std::string_view name) {
  const std::string key = canonical_class(name);
  if (key == "modelnet40_fs" || key == "modelnet40") return Benchmark::kModelNet40FS;
  if (key == "shapenet70_fs" || key == "shapenet70") return Benchmark::kShapeNet70FS;
  if (key == "scanobjectnn_fs" || key == "scanobjectnn") return Benchmark::kScanObjectNNFS;
  if (key == "toy_fs" || key == "toy") return Benchmark::kToy;
  fail(ErrorCode::kConfig, "unknown benchmark '" + std::string(name) + "'");
}

int fold_count(Benchmark b) { return b == Benchmark::kScanObjectNNFS ? 3 : 5; }

ClassTable class_table(Benchmark b, int fold) {
  check_fold(b, fold);
  switch (b) {
    case Benchmark::kModelNet40FS: return {kModelNetTrain, kModelNetTest};
    case Benchmark::kShapeNet70FS: return {kShapeNetTrain, kShapeNetTest};
    case Benchmark::kToy: return {kToyTrain, kToyTest};
    case Benchmark::kScanObjectNNFS: {
      ClassTable t;
      for (int s = 0; s < 3; ++s) {
        auto& dst = s == fold ? t.test : t.train;
        dst.insert(dst.end(), kScanObjectSplits[s].begin(), kScanObjectSplits[s].end());
      }
      return t;
    }
  }
  fail(ErrorCode::kInternal, "unhandled benchmark");
}

std::vector<ClassInfo> all_classes(Benchmark b) {
  if (b == Benchmark::kScanObjectNNFS) {
    std::vector<ClassInfo> out;
    for (const auto& s : kScanObjectSplits) out.insert(out.end(), s.begin(), s.end());
    return out;
  }
  auto t = class_table(b, 0);
  t.train.insert(t.train.end(), t.test.begin(), t.test.end());
  return t.train;
}

BenchmarkSplit make_split(Benchmark b, int fold) {
  const ClassTable t = class_table(b, fold);
  return {b, names_of(t.train), names_of(t.test), fold};
}

PartitionedInstances build_split(std::vector<LabeledInstance> instances, Benchmark b, int fold) {
  PartitionedInstances out;
  out.split = make_split(b, fold);
  const std::set<std::string> train(out.split.train_classes.begin(), out.split.train_classes.end());
  const std::set<std::string> test(out.split.test_classes.begin(), out.split.test_classes.end());
  std::set<std::string> ignored;
  for (auto& inst : instances) {
    inst.label = canonical_class(inst.label);
    if (train.count(inst.label)) out.train.push_back(std::move(inst));
    else if (test.count(inst.label)) out.test.push_back(std::move(inst));
    else ignored.insert(inst.label);
  }
  out.ignored_classes.assign(ignored.begin(), ignored.end());
  return out;
}

std::vector<std::vector<std::size_t>> partition_folds(const std::vector<LabeledInstance>& instances, int folds,
                                                      std::uint64_t seed) {
  require(folds >= 1, ErrorCode::kConfig, "fold count must be positive");
  std::map<std::string, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < instances.size(); ++i) by_class[instances[i].label].push_back(i);

  std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(folds));
  Rng rng(seed);
  // Rotating the starting fold per class keeps the overall fold sizes within
  // one of each other as well.
  std::size_t start = 0;
  for (auto& [label, idx] : by_class) {
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t j = 0; j < idx.size(); ++j) out[(start + j) % out.size()].push_back(idx[j]);
    start = (start + idx.size()) % out.size();
  }
  for (auto& f : out) std::sort(f.begin(), f.end());
  return out;
}

}  // namespace pcfsl
