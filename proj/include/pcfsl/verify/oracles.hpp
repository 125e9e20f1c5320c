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

#include <vector>

#include "pcfsl/model/metric_head.hpp"
#include "pcfsl/model/spf.hpp"

namespace pcfsl::oracle {

/// Explicit-loop references. Every edge, part row and sum is formed one
/// element at a time; no matrix products, no factorizations.

struct NormParams {
  std::vector<double> gamma, beta;
  double eps = 1e-5;
};

/// Edge convolution over materialized edges [f_i, f_j - f_i] with batch
/// statistics over all edges (training-mode normalization).
Matrix edge_conv(const Matrix& features, const IndexMatrix& neighbors, const Matrix& weight,
                 const std::vector<double>& bias, const NormParams& norm);

/// k nearest other rows under squared distance, ties to the lower index.
IndexMatrix knn(const Matrix& features, int k);

/// Cosine scores with the zero-norm guard.
std::vector<double> salient_scores(const Matrix& fmap);

/// Salient-part fusion of one instance with training-mode normalization over
/// its k_s * k part rows. `weight` is d x 2d over [coarse, row].
RowVector spf(const Matrix& fmap, int k_s, int k, const Matrix& weight, const std::vector<double>& bias,
              const NormParams& norm);

/// W = f2(f1(Z)) per channel, softmax over the stack, weighted sum.
RowVector channel_fuse(const Matrix& stack, const Matrix& w1, const std::vector<double>& b1, const Matrix& w2,
                       const std::vector<double>& b2);

/// softmax_rows(P Q^T) Q.
Matrix instance_fuse(const Matrix& p, const Matrix& q);

Matrix score(const Matrix& queries, const Matrix& prototypes, Metric metric, double tau);

Matrix prototypes(const Matrix& support, int n_way, int k_shot);

double episode_loss(const Matrix& logits, const std::vector<int>& labels);

}  // namespace pcfsl::oracle
