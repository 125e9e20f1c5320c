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

#pragma once

#include <string>
#include <vector>

#include "pcfsl/data/point_cloud.hpp"
#include "pcfsl/model/knn.hpp"
#include "pcfsl/nn/layers.hpp"

namespace pcfsl {

enum class BackboneVariant { kDgcnn, kPointNet };

std::string_view backbone_name(BackboneVariant v);
BackboneVariant parse_backbone(std::string_view name);

struct BackboneOptions {
  BackboneVariant variant = BackboneVariant::kDgcnn;
  /// EdgeConv neighborhood size.
  int k = 20;
  std::vector<int> edge_widths = {64, 64, 128, 256};
  /// Width of the per-point encoder after concatenating the EdgeConv outputs.
  int embed_dim = 1024;
  std::vector<int> pointnet_widths = {64, 64, 64, 128, 1024};

  int output_dim() const;
};

struct EdgeConvCache {
  Matrix input;
  GatherMaxCache fused;  // gather = neighbor indices
};

/// Edge convolution: for each point i and neighbor j the edge feature
/// [f_i, f_j - f_i] goes through Linear -> BatchNorm -> ReLU, and the point's
/// output is the channel-wise max over its k edges. BatchNorm statistics are
/// taken over all rows*k edges.
class EdgeConv {
 public:
  EdgeConv() = default;
  EdgeConv(int in, int out, Rng& rng);

  /// `neighbors` holds k row indices into `features` for every row.
  Matrix forward(const Matrix& features, const IndexMatrix& neighbors, Mode mode, EdgeConvCache* cache);
  Matrix backward(const EdgeConvCache& cache, const Matrix& dy);

  int in_features() const { return linear.in_features() / 2; }
  int out_features() const { return linear.out_features(); }
  void register_params(ParamRegistry& reg, const std::string& prefix);

  Linear linear;  // out x (2 * in)
  BatchNorm norm;
};

struct BackboneCache {
  int clouds = 0;
  std::vector<EdgeConvCache> edge;
  std::vector<DenseBlockCache> dense;  // PointNet layers, or the DGCNN encoder
};

/// Per-point encoder. Input rows are `clouds` consecutive blocks of equal
/// size, 3 columns (xyz); output has the same rows and output_dim() columns.
class Backbone {
 public:
  Backbone() = default;
  Backbone(const BackboneOptions& options, Rng& rng);

  Matrix forward(const Matrix& xyz, int clouds, Mode mode, BackboneCache* cache);
  /// Accumulates parameter gradients. The gradient w.r.t. the coordinates is
  /// not needed and not returned.
  void backward(const BackboneCache& cache, const Matrix& dy);

  const BackboneOptions& options() const { return options_; }
  int output_dim() const { return options_.output_dim(); }
  void register_params(ParamRegistry& reg, const std::string& prefix);

  std::vector<EdgeConv> edge_convs;
  std::vector<DenseBlock> dense;

 private:
  BackboneOptions options_;
};

/// Single-cloud convenience wrapper (evaluation mode).
Matrix backbone_forward(Backbone& backbone, const PointCloud& cloud);

}  // namespace pcfsl
