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

#include "pcfsl/model/spf.hpp"

#include <algorithm>
#include <numeric>

#include "pcfsl/model/knn.hpp"

namespace pcfsl {

RowVector coarse_global(const Matrix& fmap) {
  require(fmap.rows() > 0, ErrorCode::kInvalidArgument, "coarse_global: empty feature map");
  return fmap.colwise().maxCoeff();
}

Eigen::VectorXd salient_scores(const Matrix& fmap, const RowVector& coarse) {
  const Real cn = coarse.norm();
  Eigen::VectorXd scores(fmap.rows());
  for (Eigen::Index i = 0; i < fmap.rows(); ++i) {
    const Real rn = fmap.row(i).norm();
    scores(i) = (rn > 0 && cn > 0) ? std::clamp(fmap.row(i).dot(coarse) / (rn * cn), -1.0, 1.0) : 0.0;
  }
  return scores;
}

std::vector<int> top_scores(const Eigen::VectorXd& scores, int count) {
  std::vector<int> idx(static_cast<std::size_t>(scores.size()));
  std::iota(idx.begin(), idx.end(), 0);
  std::partial_sort(idx.begin(), idx.begin() + count, idx.end(), [&](int a, int b) {
    return scores(a) > scores(b) || (scores(a) == scores(b) && a < b);
  });
  idx.resize(static_cast<std::size_t>(count));
  return idx;
}

SalientPartSet select_salient_parts(const Matrix& fmap, const RowVector& coarse, const SpfOptions& options,
                                    const Matrix* coords) {
  const int n = static_cast<int>(fmap.rows());
  if (options.k_s < 1 || options.k_s > n) fail(ErrorCode::kConfig, "spf: need 1 <= k_s <= n");
  if (options.k < 1 || options.k >= n) fail(ErrorCode::kConfig, "spf: need 1 <= k < n");
  const bool use_coords = options.space == NeighborhoodSpace::kCoordinate;
  require(!use_coords || (coords && coords->rows() == n), ErrorCode::kInvalidArgument,
          "spf: coordinate neighborhoods need coordinates");
  const Matrix& space = use_coords ? *coords : fmap;

  SalientPartSet out;
  out.scores = salient_scores(fmap, coarse);
  out.selected = top_scores(out.scores, options.k_s);
  Matrix anchors(options.k_s, space.cols());
  for (int j = 0; j < options.k_s; ++j) anchors.row(j) = space.row(out.selected[static_cast<std::size_t>(j)]);
  const Matrix dist = pairwise_sq_dist(anchors, space);

  out.parts.resize(options.k_s, options.k);
  std::vector<int> order(static_cast<std::size_t>(n - 1));
  for (int j = 0; j < options.k_s; ++j) {
    const int self = out.selected[static_cast<std::size_t>(j)];
    int w = 0;
    for (int i = 0; i < n; ++i)
      if (i != self) order[static_cast<std::size_t>(w++)] = i;
    const int others = options.k - 1;
    std::partial_sort(order.begin(), order.begin() + others, order.end(), [&](int a, int b) {
      return dist(j, a) < dist(j, b) || (dist(j, a) == dist(j, b) && a < b);
    });
    out.parts(j, 0) = self;
    for (int t = 0; t < others; ++t) out.parts(j, t + 1) = order[static_cast<std::size_t>(t)];
  }
  return out;
}

SalientPartFusion::SalientPartFusion(int dim, const SpfOptions& options, Rng& rng)
    : encoder(2 * dim, dim, rng), encoder_norm(dim), options_(options) {}

// The encoder's affine map on [coarse, f_j] splits into a per-instance term
// and a per-point term, so part rows are gathered rather than formed.
Matrix SalientPartFusion::forward(const Matrix& fmap, int clouds, const Matrix* coords, Mode mode, SpfCache* cache) {
  require(clouds > 0 && fmap.rows() % clouds == 0, ErrorCode::kInvalidArgument, "spf: rows not divisible by clouds");
  const int points = static_cast<int>(fmap.rows() / clouds);
  const Eigen::Index d = fmap.cols();
  require(encoder.in_features() == 2 * d, ErrorCode::kInvalidArgument, "spf: feature width mismatch");
  const int part_rows = options_.k_s * options_.k;

  Matrix coarse(clouds, d);
  IndexMatrix coarse_arg(clouds, d);
  IndexMatrix gather(clouds, part_rows);
  for (int b = 0; b < clouds; ++b) {
    const Eigen::Index base = static_cast<Eigen::Index>(b) * points;
    const Matrix block = fmap.middleRows(base, points);
    for (Eigen::Index c = 0; c < d; ++c) {
      Eigen::Index best = 0;
      for (Eigen::Index r = 1; r < points; ++r)
        if (block(r, c) > block(best, c)) best = r;
      coarse(b, c) = block(best, c);
      coarse_arg(b, c) = static_cast<int>(best);
    }
    Matrix local_coords;
    if (coords) local_coords = coords->middleRows(base, points);
    const SalientPartSet set = select_salient_parts(block, coarse.row(b), options_, coords ? &local_coords : nullptr);
    for (int j = 0; j < options_.k_s; ++j)
      for (int t = 0; t < options_.k; ++t) gather(b, j * options_.k + t) = set.parts(j, t) + static_cast<int>(base);
  }

  Matrix a = coarse * encoder.weight.value.leftCols(d).transpose();
  a.rowwise() += encoder.bias.value.row(0);
  const Matrix c = fmap * encoder.weight.value.rightCols(d).transpose();
  // Max within each part and then across parts is one max over all part rows.
  Matrix out = gather_max_norm(a, c, gather, encoder_norm, mode, cache ? &cache->fused : nullptr);
  if (cache) {
    cache->clouds = clouds;
    cache->points = points;
    cache->fmap = fmap;
    cache->coarse = std::move(coarse);
    cache->coarse_argmax = std::move(coarse_arg);
    cache->part_rows = std::move(gather);
  }
  return out;
}

Matrix SalientPartFusion::backward(const SpfCache& cache, const Matrix& dglobal) {
  const Eigen::Index d = dglobal.cols();
  Matrix da, dc;
  gather_max_norm_backward(cache.fused, encoder_norm, dglobal, da, dc);
  const auto w_coarse = encoder.weight.value.leftCols(d);
  const auto w_point = encoder.weight.value.rightCols(d);
  encoder.weight.grad.leftCols(d) += da.transpose() * cache.coarse;
  encoder.weight.grad.rightCols(d) += dc.transpose() * cache.fmap;
  encoder.bias.grad.row(0) += da.colwise().sum();

  Matrix dfmap = dc * w_point;
  const Matrix dcoarse = da * w_coarse;
  for (int b = 0; b < cache.clouds; ++b)
    for (Eigen::Index c = 0; c < d; ++c)
      dfmap(static_cast<Eigen::Index>(b) * cache.points + cache.coarse_argmax(b, c), c) += dcoarse(b, c);
  return dfmap;
}

void SalientPartFusion::register_params(ParamRegistry& reg, const std::string& prefix) {
  encoder.register_params(reg, prefix + ".encoder");
  encoder_norm.register_params(reg, prefix + ".encoder_norm");
}

Matrix global_max_pool(const Matrix& fmap, int clouds, IndexMatrix* argmax) {
  require(clouds > 0 && fmap.rows() % clouds == 0, ErrorCode::kInvalidArgument, "max pool: rows not divisible by clouds");
  const Eigen::Index points = fmap.rows() / clouds, d = fmap.cols();
  Matrix out(clouds, d);
  if (argmax) argmax->resize(clouds, d);
  for (int b = 0; b < clouds; ++b)
    for (Eigen::Index c = 0; c < d; ++c) {
      Eigen::Index best = 0;
      for (Eigen::Index r = 1; r < points; ++r)
        if (fmap(b * points + r, c) > fmap(b * points + best, c)) best = r;
      out(b, c) = fmap(b * points + best, c);
      if (argmax) (*argmax)(b, c) = static_cast<int>(best);
    }
  return out;
}

Matrix global_max_pool_backward(const IndexMatrix& argmax, int points, const Matrix& dpooled) {
  Matrix d = Matrix::Zero(dpooled.rows() * points, dpooled.cols());
  for (Eigen::Index b = 0; b < dpooled.rows(); ++b)
    for (Eigen::Index c = 0; c < dpooled.cols(); ++c) d(b * points + argmax(b, c), c) = dpooled(b, c);
  return d;
}

}  // namespace pcfsl
