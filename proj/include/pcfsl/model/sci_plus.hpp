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

struct SciOptions {
  int h_r = 32;  // per-channel embedding width
};

/// Task-aware embedding: a learned weighted combination of the N prototypes
/// per channel, f_ta = sum_i w_i p_i + b. Weights are tied to N.
class MetaLearner {
 public:
  MetaLearner() = default;
  /// Initialized to the plain mean (w_i = 1/N, b = 0).
  explicit MetaLearner(int n_way);

  RowVector forward(const Matrix& prototypes) const;
  /// Accumulates parameter gradients; returns d(prototypes).
  Matrix backward(const Matrix& prototypes, const RowVector& dtask);

  int n_way() const { return static_cast<int>(weight.value.cols()); }
  void register_params(ParamRegistry& reg, const std::string& prefix);

  Param weight;  // 1 x N
  Param bias;    // 1 x 1
};

struct CibCache {
  Matrix stacked;  // d x 2: [feature, task] per channel
  Matrix fused;    // d x h_r
  Matrix q, k, v;  // d x h_r
  Matrix attn;     // d x d, row-stochastic
  Matrix weighted; // d x h_r
};

/// Channel interaction block: each channel of [feature, task] is expanded to
/// h_r dims, channel-to-channel attention (d x d, softmax over keys) reweights
/// the values, which are compressed back to one number per channel and added
/// to the input feature.
class ChannelInteractionBlock {
 public:
  ChannelInteractionBlock() = default;
  /// The compression map starts at zero, so a fresh block is the identity.
  ChannelInteractionBlock(int h_r, Rng& rng);

  RowVector forward(const RowVector& feature, const RowVector& task, CibCache* cache) const;
  /// Accumulates parameter gradients and adds into dfeature / dtask.
  void backward(const CibCache& cache, const RowVector& dout, RowVector& dfeature, RowVector& dtask);

  int h_r() const { return fuse.out_features(); }
  void register_params(ParamRegistry& reg, const std::string& prefix);

  Linear fuse;      // 2 -> h_r
  Linear query;     // h_r -> h_r
  Linear key;       // h_r -> h_r
  Linear value;     // h_r -> h_r
  Linear compress;  // h_r -> 1
};

struct SciCache {
  Matrix prototypes;
  RowVector task;
  std::vector<CibCache> proto_blocks;
  std::vector<CibCache> query_blocks;
};

/// Self-channel interaction: one task embedding from the prototypes, then the
/// shared interaction block refines every prototype and every query.
class SelfChannelInteraction {
 public:
  SelfChannelInteraction() = default;
  SelfChannelInteraction(int n_way, const SciOptions& options, Rng& rng);

  void forward(const Matrix& prototypes, const Matrix& queries, Matrix& out_prototypes, Matrix& out_queries,
               SciCache* cache) const;
  /// Returns d(prototypes), d(queries) through the out-parameters.
  void backward(const SciCache& cache, const Matrix& dproto_out, const Matrix& dquery_out, Matrix& dprototypes,
                Matrix& dqueries);

  void register_params(ParamRegistry& reg, const std::string& prefix);

  MetaLearner meta;
  ChannelInteractionBlock block;
};

}  // namespace pcfsl
