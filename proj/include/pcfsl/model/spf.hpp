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

#include "pcfsl/nn/layers.hpp"

namespace pcfsl {

enum class NeighborhoodSpace { kFeature, kCoordinate };

struct SpfOptions {
  int k_s = 64;  // salient parts per instance
  int k = 16;    // rows per part
  NeighborhoodSpace space = NeighborhoodSpace::kFeature;
};

/// Channel-wise max over the rows of a feature map.
RowVector coarse_global(const Matrix& fmap);

/// Cosine similarity of every row with `coarse`; 0 where either norm is zero.
Eigen::VectorXd salient_scores(const Matrix& fmap, const RowVector& coarse);

/// Indices of the `count` largest scores, best first, ties to the lower index.
std::vector<int> top_scores(const Eigen::VectorXd& scores, int count);

struct SalientPartSet {
  Eigen::VectorXd scores;
  std::vector<int> selected;  // k_s point indices
  IndexMatrix parts;          // k_s x k row indices; column 0 is the salient point
};

/// Scores the rows of one instance, picks the k_s most salient points and
/// gathers a part of k rows around each: the point itself plus its k-1
/// nearest other rows, measured in feature space (or in `coords` when the
/// coordinate space is selected).
SalientPartSet select_salient_parts(const Matrix& fmap, const RowVector& coarse, const SpfOptions& options,
                                    const Matrix* coords);

struct SpfCache {
  int clouds = 0;
  int points = 0;
  Matrix fmap;
  Matrix coarse;              // clouds x d
  IndexMatrix coarse_argmax;  // clouds x d, row within the instance
  IndexMatrix part_rows;      // clouds x (k_s * k), global fmap rows, part-major
  GatherMaxCache fused;
};

/// Salient-part fusion: refines the max-pooled descriptor of each instance by
/// encoding its salient parts concatenated with that descriptor, then
/// max-pooling within and across parts. The encoder (Linear 2d -> d, BatchNorm,
/// ReLU) is shared by every part row; its normalization statistics cover all
/// part rows of the batch.
class SalientPartFusion {
 public:
  SalientPartFusion() = default;
  SalientPartFusion(int dim, const SpfOptions& options, Rng& rng);

  /// `fmap` stacks `clouds` blocks of equal row count. `coords` (same rows,
  /// 3 columns) is required only for the coordinate neighborhood space.
  Matrix forward(const Matrix& fmap, int clouds, const Matrix* coords, Mode mode, SpfCache* cache);
  Matrix backward(const SpfCache& cache, const Matrix& dglobal);

  const SpfOptions& options() const { return options_; }
  void register_params(ParamRegistry& reg, const std::string& prefix);

  Linear encoder;  // 2d -> d on [coarse, part row]
  BatchNorm encoder_norm;

 private:
  SpfOptions options_;
};

/// Channel-wise max over each of `clouds` row blocks (the non-SPF path).
Matrix global_max_pool(const Matrix& fmap, int clouds, IndexMatrix* argmax);
Matrix global_max_pool_backward(const IndexMatrix& argmax, int points, const Matrix& dpooled);

}  // namespace pcfsl
