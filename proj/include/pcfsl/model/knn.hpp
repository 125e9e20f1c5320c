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

#include "pcfsl/common.hpp"

namespace pcfsl {

/// k nearest rows of each row under squared Euclidean distance.
struct NeighborIndex {
  IndexMatrix indices;  // n x k
  int k = 0;
};

/// Row i lists the k nearest other rows to row i (self excluded), nearest
/// first, ties broken by lower index. Requires n > k.
NeighborIndex knn_graph(const Matrix& features, int k);

/// Squared distances between all rows of `a` and all rows of `b`.
Matrix pairwise_sq_dist(const Matrix& a, const Matrix& b);

/// knn_graph on each of `clouds` consecutive row blocks of `points` rows.
/// Returned indices are global row indices into `features`.
IndexMatrix batched_knn(const Matrix& features, int clouds, int points, int k);

}  // namespace pcfsl
