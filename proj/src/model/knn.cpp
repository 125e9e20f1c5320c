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

#include "pcfsl/model/knn.hpp"

#include <vector>

namespace pcfsl {

Matrix pairwise_sq_dist(const Matrix& a, const Matrix& b) {
  const Eigen::VectorXd an = a.rowwise().squaredNorm();
  const Eigen::VectorXd bn = b.rowwise().squaredNorm();
  Matrix d = -2.0 * a * b.transpose();
  d.colwise() += an;
  d.rowwise() += bn.transpose();
  return d.cwiseMax(0.0);
}

NeighborIndex knn_graph(const Matrix& features, int k) {
  const auto n = static_cast<int>(features.rows());
  if (k < 1 || n <= k)
    fail(ErrorCode::kConfig, "knn_graph: need n > k >= 1 (n=" + std::to_string(n) + ", k=" + std::to_string(k) + ")");
  const Matrix dist = pairwise_sq_dist(features, features);
  NeighborIndex out;
  out.k = k;
  out.indices.resize(n, k);
  // Bounded insertion keeps the k best (distance, index) pairs in order;
  // scanning j upward and inserting after equal distances breaks ties by index.
  std::vector<Real> best_d(static_cast<std::size_t>(k));
  std::vector<int> best_i(static_cast<std::size_t>(k));
  for (int i = 0; i < n; ++i) {
    int filled = 0;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      const Real dj = dist(i, j);
      if (filled == k && !(dj < best_d[static_cast<std::size_t>(k - 1)])) continue;
      int pos = filled < k ? filled++ : k - 1;
      while (pos > 0 && best_d[static_cast<std::size_t>(pos - 1)] > dj) {
        best_d[static_cast<std::size_t>(pos)] = best_d[static_cast<std::size_t>(pos - 1)];
        best_i[static_cast<std::size_t>(pos)] = best_i[static_cast<std::size_t>(pos - 1)];
        --pos;
      }
      best_d[static_cast<std::size_t>(pos)] = dj;
      best_i[static_cast<std::size_t>(pos)] = j;
    }
    for (int t = 0; t < k; ++t) out.indices(i, t) = best_i[static_cast<std::size_t>(t)];
  }
  return out;
}

IndexMatrix batched_knn(const Matrix& features, int clouds, int points, int k) {
  IndexMatrix out(static_cast<Eigen::Index>(clouds) * points, k);
  for (int b = 0; b < clouds; ++b) {
    const NeighborIndex local = knn_graph(features.middleRows(static_cast<Eigen::Index>(b) * points, points), k);
    out.middleRows(static_cast<Eigen::Index>(b) * points, points) = local.indices.array() + b * points;
  }
  return out;
}

}  // namespace pcfsl
