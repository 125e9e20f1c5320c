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

#include "pcfsl/model/sci_plus.hpp"

#include <cmath>

namespace pcfsl {

MetaLearner::MetaLearner(int n_way) : weight(1, n_way), bias(1, 1) {
  weight.value.setConstant(1.0 / n_way);
}

RowVector MetaLearner::forward(const Matrix& prototypes) const {
  if (prototypes.rows() != weight.value.cols())
    fail(ErrorCode::kConfig, "meta learner: expected " + std::to_string(weight.value.cols()) + " prototypes, got " +
                                 std::to_string(prototypes.rows()));
  RowVector task = weight.value.row(0) * prototypes;
  task.array() += bias.value(0, 0);
  return task;
}

Matrix MetaLearner::backward(const Matrix& prototypes, const RowVector& dtask) {
  weight.grad.row(0) += (prototypes * dtask.transpose()).transpose();
  bias.grad(0, 0) += dtask.sum();
  return weight.value.transpose() * dtask;
}

void MetaLearner::register_params(ParamRegistry& reg, const std::string& prefix) {
  reg.add(prefix + ".weight", weight);
  reg.add(prefix + ".bias", bias);
}

ChannelInteractionBlock::ChannelInteractionBlock(int h_r, Rng& rng)
    : fuse(2, h_r, rng), query(h_r, h_r, rng), key(h_r, h_r, rng), value(h_r, h_r, rng), compress(h_r, 1, rng) {
  compress.weight.value.setZero();
  compress.bias.value.setZero();
}

RowVector ChannelInteractionBlock::forward(const RowVector& feature, const RowVector& task, CibCache* cache) const {
  require(feature.size() == task.size(), ErrorCode::kInvalidArgument, "cib: feature/task width mismatch");
  const Eigen::Index d = feature.size();
  Matrix stacked(d, 2);
  stacked.col(0) = feature.transpose();
  stacked.col(1) = task.transpose();
  Matrix fused = fuse.forward(stacked);
  Matrix q = query.forward(fused), k = key.forward(fused), v = value.forward(fused);
  Matrix attn = softmax_rows((q * k.transpose()) / std::sqrt(static_cast<Real>(h_r())));
  Matrix weighted = attn * v;
  RowVector out = feature + compress.forward(weighted).col(0).transpose();
  if (cache) {
    cache->stacked = std::move(stacked);
    cache->fused = std::move(fused);
    cache->q = std::move(q);
    cache->k = std::move(k);
    cache->v = std::move(v);
    cache->attn = std::move(attn);
    cache->weighted = std::move(weighted);
  }
  return out;
}

void ChannelInteractionBlock::backward(const CibCache& c, const RowVector& dout, RowVector& dfeature, RowVector& dtask) {
  const Real scale = 1.0 / std::sqrt(static_cast<Real>(h_r()));
  const Matrix dcompressed = dout.transpose();  // d x 1
  const Matrix dweighted = compress.backward(c.weighted, dcompressed);
  const Matrix dattn = dweighted * c.v.transpose();
  const Matrix dv = c.attn.transpose() * dweighted;
  const Matrix dscores = softmax_rows_backward(c.attn, dattn) * scale;
  const Matrix dq = dscores * c.k;
  const Matrix dk = dscores.transpose() * c.q;
  Matrix dfused = query.backward(c.fused, dq);
  dfused += key.backward(c.fused, dk);
  dfused += value.backward(c.fused, dv);
  const Matrix dstacked = fuse.backward(c.stacked, dfused);
  dfeature += dout + dstacked.col(0).transpose();
  dtask += dstacked.col(1).transpose();
}

void ChannelInteractionBlock::register_params(ParamRegistry& reg, const std::string& prefix) {
  fuse.register_params(reg, prefix + ".fuse");
  query.register_params(reg, prefix + ".query");
  key.register_params(reg, prefix + ".key");
  value.register_params(reg, prefix + ".value");
  compress.register_params(reg, prefix + ".compress");
}

SelfChannelInteraction::SelfChannelInteraction(int n_way, const SciOptions& options, Rng& rng)
    : meta(n_way), block(options.h_r, rng) {}

void SelfChannelInteraction::forward(const Matrix& prototypes, const Matrix& queries, Matrix& out_prototypes,
                                     Matrix& out_queries, SciCache* cache) const {
  const RowVector task = meta.forward(prototypes);
  out_prototypes.resize(prototypes.rows(), prototypes.cols());
  out_queries.resize(queries.rows(), queries.cols());
  if (cache) {
    cache->prototypes = prototypes;
    cache->task = task;
    cache->proto_blocks.assign(static_cast<std::size_t>(prototypes.rows()), {});
    cache->query_blocks.assign(static_cast<std::size_t>(queries.rows()), {});
  }
  for (Eigen::Index i = 0; i < prototypes.rows(); ++i)
    out_prototypes.row(i) =
        block.forward(prototypes.row(i), task, cache ? &cache->proto_blocks[static_cast<std::size_t>(i)] : nullptr);
  for (Eigen::Index j = 0; j < queries.rows(); ++j)
    out_queries.row(j) =
        block.forward(queries.row(j), task, cache ? &cache->query_blocks[static_cast<std::size_t>(j)] : nullptr);
}

void SelfChannelInteraction::backward(const SciCache& cache, const Matrix& dproto_out, const Matrix& dquery_out,
                                      Matrix& dprototypes, Matrix& dqueries) {
  const Eigen::Index d = cache.task.size();
  RowVector dtask = RowVector::Zero(d);
  dprototypes = Matrix::Zero(dproto_out.rows(), d);
  dqueries = Matrix::Zero(dquery_out.rows(), d);
  for (Eigen::Index i = 0; i < dproto_out.rows(); ++i) {
    RowVector df = RowVector::Zero(d);
    block.backward(cache.proto_blocks[static_cast<std::size_t>(i)], dproto_out.row(i), df, dtask);
    dprototypes.row(i) = df;
  }
  for (Eigen::Index j = 0; j < dquery_out.rows(); ++j) {
    RowVector df = RowVector::Zero(d);
    block.backward(cache.query_blocks[static_cast<std::size_t>(j)], dquery_out.row(j), df, dtask);
    dqueries.row(j) = df;
  }
  dprototypes += meta.backward(cache.prototypes, dtask);
}

void SelfChannelInteraction::register_params(ParamRegistry& reg, const std::string& prefix) {
  meta.register_params(reg, prefix + ".meta");
  block.register_params(reg, prefix + ".block");
}

}  // namespace pcfsl
