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

#include "pcfsl/model/backbone.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>

namespace pcfsl {

std::string_view backbone_name(BackboneVariant v) { return v == BackboneVariant::kDgcnn ? "dgcnn" : "pointnet"; }

BackboneVariant parse_backbone(std::string_view name) {
  std::string key(name);
  std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (key == "dgcnn") return BackboneVariant::kDgcnn;
  if (key == "pointnet") return BackboneVariant::kPointNet;
  fail(ErrorCode::kConfig, "unknown backbone '" + std::string(name) + "'");
}

int BackboneOptions::output_dim() const {
  return variant == BackboneVariant::kDgcnn ? embed_dim : pointnet_widths.back();
}

EdgeConv::EdgeConv(int in, int out, Rng& rng) : linear(2 * in, out, rng), norm(out) {}

// The affine map on [f_i, f_j - f_i] splits as A_i + C_j with
// A = F (W_a - W_b)^T + b and C = F W_b^T, so the edge tensor is never formed.
Matrix EdgeConv::forward(const Matrix& features, const IndexMatrix& neighbors, Mode mode, EdgeConvCache* cache) {
  const Eigen::Index c = features.cols();
  require(linear.in_features() == 2 * c, ErrorCode::kInvalidArgument, "edge_conv: channel mismatch");
  require(neighbors.rows() == features.rows() && neighbors.cols() >= 1, ErrorCode::kInvalidArgument,
          "edge_conv: neighbor rows mismatch");
  const Matrix w_a = linear.weight.value.leftCols(c);
  const Matrix w_b = linear.weight.value.rightCols(c);
  Matrix a = features * (w_a - w_b).transpose();
  a.rowwise() += linear.bias.value.row(0);
  const Matrix cj = features * w_b.transpose();
  if (cache) cache->input = features;
  return gather_max_norm(a, cj, neighbors, norm, mode, cache ? &cache->fused : nullptr);
}

Matrix EdgeConv::backward(const EdgeConvCache& cache, const Matrix& dy) {
  const Eigen::Index c = cache.input.cols();
  Matrix da, dc;
  gather_max_norm_backward(cache.fused, norm, dy, da, dc);
  const Matrix w_a = linear.weight.value.leftCols(c);
  const Matrix w_b = linear.weight.value.rightCols(c);
  const Matrix dwa = da.transpose() * cache.input;
  linear.weight.grad.leftCols(c) += dwa;
  linear.weight.grad.rightCols(c) += dc.transpose() * cache.input - dwa;
  linear.bias.grad.row(0) += da.colwise().sum();
  return da * (w_a - w_b) + dc * w_b;
}

void EdgeConv::register_params(ParamRegistry& reg, const std::string& prefix) {
  linear.register_params(reg, prefix + ".linear");
  norm.register_params(reg, prefix + ".norm");
}

Backbone::Backbone(const BackboneOptions& options, Rng& rng) : options_(options) {
  if (options.variant == BackboneVariant::kDgcnn) {
    require(!options.edge_widths.empty(), ErrorCode::kConfig, "backbone: empty edge_widths");
    int in = 3;
    for (int w : options.edge_widths) {
      edge_convs.emplace_back(in, w, rng);
      in = w;
    }
    const int concat = std::accumulate(options.edge_widths.begin(), options.edge_widths.end(), 0);
    dense.emplace_back(concat, options.embed_dim, rng);
  } else {
    require(!options.pointnet_widths.empty(), ErrorCode::kConfig, "backbone: empty pointnet_widths");
    int in = 3;
    for (int w : options.pointnet_widths) {
      dense.emplace_back(in, w, rng);
      in = w;
    }
  }
}

Matrix Backbone::forward(const Matrix& xyz, int clouds, Mode mode, BackboneCache* cache) {
  require(clouds > 0 && xyz.rows() % clouds == 0, ErrorCode::kInvalidArgument, "backbone: rows not divisible by clouds");
  const int points = static_cast<int>(xyz.rows() / clouds);
  if (cache) {
    cache->clouds = clouds;
    cache->edge.assign(edge_convs.size(), {});
    cache->dense.assign(dense.size(), {});
  }
  if (options_.variant == BackboneVariant::kPointNet) {
    Matrix h = xyz;
    for (std::size_t l = 0; l < dense.size(); ++l) h = dense[l].forward(h, mode, cache ? &cache->dense[l] : nullptr);
    return h;
  }
  // Graph recomputed per stage: coordinates for the first, features after.
  std::vector<Matrix> stages;
  Matrix h = xyz;
  for (std::size_t l = 0; l < edge_convs.size(); ++l) {
    const IndexMatrix nbr = batched_knn(h, clouds, points, options_.k);
    h = edge_convs[l].forward(h, nbr, mode, cache ? &cache->edge[l] : nullptr);
    stages.push_back(h);
  }
  Matrix concat(xyz.rows(), dense[0].in_features());
  Eigen::Index col = 0;
  for (const auto& s : stages) {
    concat.middleCols(col, s.cols()) = s;
    col += s.cols();
  }
  return dense[0].forward(concat, mode, cache ? &cache->dense[0] : nullptr);
}

void Backbone::backward(const BackboneCache& cache, const Matrix& dy) {
  if (options_.variant == BackboneVariant::kPointNet) {
    Matrix g = dy;
    for (std::size_t l = dense.size(); l-- > 0;) {
      g = dense[l].backward(cache.dense[l], g);
    }
    return;
  }
  const Matrix dconcat = dense[0].backward(cache.dense[0], dy);
  std::vector<Eigen::Index> offsets;
  Eigen::Index col = 0;
  for (const auto& ec : edge_convs) {
    offsets.push_back(col);
    col += ec.out_features();
  }
  Matrix carry;  // gradient flowing into stage l's output from stage l+1
  for (std::size_t l = edge_convs.size(); l-- > 0;) {
    Matrix g = dconcat.middleCols(offsets[l], edge_convs[l].out_features());
    if (carry.size()) g += carry;
    if (l == 0) {
      edge_convs[l].backward(cache.edge[l], g);
    } else {
      carry = edge_convs[l].backward(cache.edge[l], g);
    }
  }
}

void Backbone::register_params(ParamRegistry& reg, const std::string& prefix) {
  for (std::size_t l = 0; l < edge_convs.size(); ++l) edge_convs[l].register_params(reg, prefix + ".edge" + std::to_string(l));
  for (std::size_t l = 0; l < dense.size(); ++l) dense[l].register_params(reg, prefix + ".dense" + std::to_string(l));
}

Matrix backbone_forward(Backbone& backbone, const PointCloud& cloud) {
  return backbone.forward(to_matrix(cloud), 1, Mode::kEval, nullptr);
}

}  // namespace pcfsl
