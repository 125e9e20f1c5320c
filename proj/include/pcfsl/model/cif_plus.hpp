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

struct CifOptions {
  int k1 = 3;  // cross-set neighbors per anchor
  int h = 32;  // hidden width of the stack-axis weight map
};

/// Indices of the k1 pool rows most cosine-similar to `anchor`, best first,
/// ties to the lower index. Zero-norm vectors have similarity 0.
std::vector<int> top_k_similar(const RowVector& anchor, const Matrix& pool, int k1);

struct ChannelFuseCache {
  Matrix stack;   // d x (k1+1): anchor in column 0, neighbors after
  Matrix hidden;  // d x h
  Matrix weights; // d x (k1+1), softmax over columns
  std::vector<int> neighbors;
};

/// Channel-weighted fusion of an anchor with its nearest cross-set vectors:
/// W = f2(f1(Z)) per channel, output = sum over the stack of softmax(W) * Z.
class ChannelFuseBranch {
 public:
  ChannelFuseBranch() = default;
  ChannelFuseBranch(int k1, int h, Rng& rng);

  /// `stack` is d x (k1+1) with the anchor first.
  RowVector forward(const Matrix& stack, ChannelFuseCache* cache) const;
  /// Accumulates parameter gradients; returns d(stack).
  Matrix backward(const ChannelFuseCache& cache, const RowVector& dout);

  int k1() const { return f1.in_features() - 1; }
  void register_params(ParamRegistry& reg, const std::string& prefix);

  Linear f1;  // k1+1 -> h
  Linear f2;  // h -> k1+1
};

/// Builds the d x (k1+1) stack [anchor, pool rows...].
Matrix fusion_stack(const RowVector& anchor, const Matrix& pool, const std::vector<int>& neighbors);

/// M = A B^T, one dot product per entry, so cross_logits(B, A) is exactly M^T.
Matrix cross_logits(const Matrix& a, const Matrix& b);

/// Instance attention: softmax_rows(A B^T) B. Returns the attention in `attn`.
Matrix instance_fuse(const Matrix& a, const Matrix& b, Matrix* attn);
/// softmax_rows(logits) B, for a precomputed logit map.
Matrix instance_fuse_logits(const Matrix& logits, const Matrix& b, Matrix* attn);
/// Gradients of instance_fuse with respect to a and b (accumulated).
void instance_fuse_backward(const Matrix& a, const Matrix& b, const Matrix& attn, const Matrix& dout, Matrix& da,
                            Matrix& db);

struct CifSideCache {
  std::vector<ChannelFuseCache> upper;
  Matrix attn;
};

struct CifCache {
  Matrix prototypes;
  Matrix queries;
  Matrix logits;  // N x N_q; the query side used its transpose
  CifSideCache proto_side;
  CifSideCache query_side;
};

/// Cross-instance fusion: every prototype is refined with its top-k1 similar
/// queries (upper branch) and an attention mixture of all queries (lower
/// branch); every query symmetrically against the prototypes. All updates
/// read the pre-update features.
class CrossInstanceFusion {
 public:
  CrossInstanceFusion() = default;
  /// The query side uses min(k1, n_way) neighbors.
  CrossInstanceFusion(int n_way, const CifOptions& options, Rng& rng);

  void forward(const Matrix& prototypes, const Matrix& queries, Matrix& out_prototypes, Matrix& out_queries,
               CifCache* cache) const;
  void backward(const CifCache& cache, const Matrix& dproto_out, const Matrix& dquery_out, Matrix& dprototypes,
                Matrix& dqueries);

  const CifOptions& options() const { return options_; }
  void register_params(ParamRegistry& reg, const std::string& prefix);

  ChannelFuseBranch proto_branch;
  ChannelFuseBranch query_branch;

 private:
  CifOptions options_;
};

}  // namespace pcfsl
