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

#include "pcfsl/data/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

namespace pcfsl {
namespace {

std::ifstream open_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  return in;
}

bool next_content_line(std::istream& in, std::string& line) {
  while (std::getline(in, line)) {
    const auto pos = line.find_first_not_of(" \t\r");
    if (pos == std::string::npos || line[pos] == '#') continue;
    return true;
  }
  return false;
}

void check_mesh(const TriangleMesh& mesh, const std::filesystem::path& path) {
  if (mesh.vertices.empty() || mesh.faces.empty())
    fail(ErrorCode::kFormat, path.string() + ": mesh has no faces");
  for (const auto& f : mesh.faces)
    for (int v : f)
      if (v < 0 || v >= static_cast<int>(mesh.vertices.size()))
        fail(ErrorCode::kFormat, path.string() + ": face index out of range");
}

}  // namespace

TriangleMesh read_off(const std::filesystem::path& path) {
  auto in = open_text(path);
  std::string line;
  if (!next_content_line(in, line)) fail(ErrorCode::kFormat, path.string() + ": empty OFF file");
  // Some ModelNet files glue the counts to the keyword: "OFF490 518 0".
  std::size_t start = line.find("OFF");
  if (start == std::string::npos) fail(ErrorCode::kFormat, path.string() + ": missing OFF header");
  std::string rest = line.substr(start + 3);
  if (rest.find_first_not_of(" \t\r") == std::string::npos) {
    if (!next_content_line(in, line)) fail(ErrorCode::kFormat, path.string() + ": missing OFF counts");
    rest = line;
  }
  long nv = -1, nf = -1;
  std::istringstream counts(rest);
  if (!(counts >> nv >> nf) || nv <= 0 || nf <= 0)
    fail(ErrorCode::kFormat, path.string() + ": bad OFF counts");

  TriangleMesh mesh;
  mesh.vertices.reserve(static_cast<std::size_t>(nv));
  for (long i = 0; i < nv; ++i) {
    float x, y, z;
    if (!next_content_line(in, line)) fail(ErrorCode::kFormat, path.string() + ": truncated vertices");
    std::istringstream row(line);
    if (!(row >> x >> y >> z)) fail(ErrorCode::kFormat, path.string() + ": bad vertex row");
    mesh.vertices.emplace_back(x, y, z);
  }
  for (long i = 0; i < nf; ++i) {
    if (!next_content_line(in, line)) fail(ErrorCode::kFormat, path.string() + ": truncated faces");
    std::istringstream row(line);
    int k;
    if (!(row >> k) || k < 3) fail(ErrorCode::kFormat, path.string() + ": bad face row");
    std::vector<int> idx(static_cast<std::size_t>(k));
    for (auto& v : idx)
      if (!(row >> v)) fail(ErrorCode::kFormat, path.string() + ": bad face row");
    for (int t = 1; t + 1 < k; ++t) mesh.faces.push_back({idx[0], idx[t], idx[t + 1]});
  }
  check_mesh(mesh, path);
  return mesh;
}

TriangleMesh read_obj(const std::filesystem::path& path) {
  auto in = open_text(path);
  TriangleMesh mesh;
  std::string line;
  while (next_content_line(in, line)) {
    std::istringstream row(line);
    std::string tag;
    row >> tag;
    if (tag == "v") {
      float x, y, z;
      if (!(row >> x >> y >> z)) fail(ErrorCode::kFormat, path.string() + ": bad vertex row");
      mesh.vertices.emplace_back(x, y, z);
    } else if (tag == "f") {
      std::vector<int> idx;
      std::string tok;
      while (row >> tok) {
        // "v/vt/vn" and negative (relative) indices are both legal.
        int v = std::stoi(tok.substr(0, tok.find('/')));
        v = v < 0 ? static_cast<int>(mesh.vertices.size()) + v : v - 1;
        idx.push_back(v);
      }
      if (idx.size() < 3) fail(ErrorCode::kFormat, path.string() + ": bad face row");
      for (std::size_t t = 1; t + 1 < idx.size(); ++t) mesh.faces.push_back({idx[0], idx[t], idx[t + 1]});
    }
  }
  check_mesh(mesh, path);
  return mesh;
}

PointCloud read_xyz(const std::filesystem::path& path) {
  auto in = open_text(path);
  std::vector<Eigen::Vector3f> pts;
  std::string line;
  while (next_content_line(in, line)) {
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream row(line);
    float x, y, z;
    if (!(row >> x >> y >> z)) fail(ErrorCode::kFormat, path.string() + ": bad point row");
    pts.emplace_back(x, y, z);
  }
  PointCloud cloud;
  cloud.points.resize(static_cast<Eigen::Index>(pts.size()), 3);
  for (std::size_t i = 0; i < pts.size(); ++i) cloud.points.row(static_cast<Eigen::Index>(i)) = pts[i].transpose();
  cloud.validate();
  return cloud;
}

PointCloud sample_surface(const TriangleMesh& mesh, std::size_t count, Rng& rng) {
  std::vector<double> cumulative(mesh.faces.size());
  double total = 0.0;
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const auto& tri = mesh.faces[f];
    const Eigen::Vector3d a = mesh.vertices[tri[0]].cast<double>();
    const Eigen::Vector3d b = mesh.vertices[tri[1]].cast<double>();
    const Eigen::Vector3d c = mesh.vertices[tri[2]].cast<double>();
    total += 0.5 * (b - a).cross(c - a).norm();
    cumulative[f] = total;
  }
  if (!(total > 0.0)) fail(ErrorCode::kFormat, "mesh has zero surface area");

  PointCloud cloud;
  cloud.points.resize(static_cast<Eigen::Index>(count), 3);
  for (std::size_t i = 0; i < count; ++i) {
    const double pick = uniform01(rng) * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), pick);
    const std::size_t f = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), cumulative.size() - 1);
    const auto& tri = mesh.faces[f];
    double u = uniform01(rng), v = uniform01(rng);
    if (u + v > 1.0) {
      u = 1.0 - u;
      v = 1.0 - v;
    }
    const Eigen::Vector3f p = mesh.vertices[tri[0]] + static_cast<float>(u) * (mesh.vertices[tri[1]] - mesh.vertices[tri[0]]) +
                              static_cast<float>(v) * (mesh.vertices[tri[2]] - mesh.vertices[tri[0]]);
    cloud.points.row(static_cast<Eigen::Index>(i)) = p.transpose();
  }
  return cloud;
}

}  // namespace pcfsl
