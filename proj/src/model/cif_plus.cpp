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

#include "pcfsl/model/cif_plus.hpp"

#include <algorithm>
#include <numeric>

namespace pcfsl {

std::vector<int> top_k_similar(const RowVector& anchor, const Matrix& pool, int k1) {
  const int m = static_cast<int>(pool.rows());
  if (k1 < 1 || k1 > m)
    fail(ErrorCode::kConfig, "top_k_similar: k1=" + std::to_string(k1) + " with pool of " + std::to_string(m));
  const Real an = anchor.norm();
  std::vector<Real> sim(static_cast<std::size_t>(m), 0.0);
  for (int i = 0; i < m; ++i) {
    const Real pn = pool.row(i).norm();
    if (an > 0.0 && pn > 0.0) sim[static_cast<std::size_t>(i)] = anchor.dot(pool.row(i)) / (an * pn);
  }
  std::vector<int> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return sim[static_cast<std::size_t>(a)] > sim[static_cast<std::size_t>(b)];
  });
  order.resize(static_cast<std::size_t>(k1));
  return order;
}

ChannelFuseBranch::ChannelFuseBranch(int k1, int h, Rng& rng) : f1(k1 + 1, h, rng), f2(h, k1 + 1, rng) {}

RowVector ChannelFuseBranch::forward(const Matrix& stack, ChannelFuseCache* cache) const {
  require(stack.cols() == f1.in_features(), ErrorCode::kInvalidArgument, "channel fuse: stack width mismatch");
  Matrix hidden = f1.forward(stack);
  Matrix weights = softmax_rows(f2.forward(hidden));
  RowVector out = (weights.array() * stack.array()).rowwise().sum().transpose();
  if (cache) {
    cache->stack = stack;
    cache->hidden = std::move(hidden);
    cache->weights = std::move(weights);
  }
  return out;
}

Matrix ChannelFuseBranch::backward(const ChannelFuseCache& c, const RowVector& dout) {
  // out_c = sum_s w_cs z_cs
  const Matrix dstack_direct = c.weights.array().colwise() * dout.transpose().array();
  const Matrix dweights = c.stack.array().colwise() * dout.transpose().array();
  const Matrix dlogits = softmax_rows_backward(c.weights, dweights);
  const Matrix dhidden = f2.backward(c.hidden, dlogits);
  return dstack_direct + f1.backward(c.stack, dhidden);
}

void ChannelFuseBranch::register_params(ParamRegistry& reg, const std::string& prefix) {
  f1.register_params(reg, prefix + ".f1");
  f2.register_params(reg, prefix + ".f2");
}

Matrix fusion_stack(const RowVector& anchor, const Matrix& pool, const std::vector<int>& neighbors) {
  Matrix stack(anchor.size(), static_cast<Eigen::Index>(neighbors.size()) + 1);
  stack.col(0) = anchor.transpose();
  for (std::size_t s = 0; s < neighbors.size(); ++s)
    stack.col(static_cast<Eigen::Index>(s) + 1) = pool.row(neighbors[s]).transpose();
  return stack;
}

Matrix cross_logits(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.cols(), ErrorCode::kInvalidArgument, "instance fuse: width mismatch");
  Matrix m(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.rows(); ++j) m(i, j) = a.row(i).dot(b.row(j));
  return m;
}

Matrix instance_fuse(const Matrix& a, const Matrix& b, Matrix* attn) {
  return instance_fuse_logits(cross_logits(a, b), b, attn);
}

Matrix instance_fuse_logits(const Matrix& logits, const Matrix& b, Matrix* attn) {
  Matrix s = softmax_rows(logits);
  Matrix out = s * b;
  if (attn) *attn = std::move(s);
  return out;
}

void instance_fuse_backward(const Matrix& a, const Matrix& b, const Matrix& attn, const Matrix& dout, Matrix& da,
                            Matrix& db) {
  const Matrix dattn = dout * b.transpose();
  const Matrix dlogits = softmax_rows_backward(attn, dattn);
  da += dlogits * b;
  db += attn.transpose() * dout + dlogits.transpose() * a;
}

CrossInstanceFusion::CrossInstanceFusion(int n_way, const CifOptions& options, Rng& rng)
    : proto_branch(options.k1, options.h, rng),
      query_branch(std::min(options.k1, n_way), options.h, rng),
      options_(options) {}

namespace {

Matrix fuse_side(const ChannelFuseBranch& branch, const Matrix& anchors, const Matrix& pool, const Matrix& logits,
                 CifSideCache* cache) {
  Matrix out = anchors;
  if (cache) cache->upper.assign(static_cast<std::size_t>(anchors.rows()), {});
  for (Eigen::Index i = 0; i < anchors.rows(); ++i) {
    const std::vector<int> nb = top_k_similar(anchors.row(i), pool, branch.k1());
    ChannelFuseCache* uc = cache ? &cache->upper[static_cast<std::size_t>(i)] : nullptr;
    out.row(i) += branch.forward(fusion_stack(anchors.row(i), pool, nb), uc);
    if (uc) uc->neighbors = nb;
  }
  out += instance_fuse_logits(logits, pool, cache ? &cache->attn : nullptr);
  return out;
}

void fuse_side_backward(ChannelFuseBranch& branch, const CifSideCache& cache, const Matrix& anchors,
                        const Matrix& pool, const Matrix& dout, Matrix& danchors, Matrix& dpool) {
  danchors += dout;
  for (Eigen::Index i = 0; i < anchors.rows(); ++i) {
    const ChannelFuseCache& uc = cache.upper[static_cast<std::size_t>(i)];
    const Matrix dstack = branch.backward(uc, dout.row(i));
    danchors.row(i) += dstack.col(0).transpose();
    for (std::size_t s = 0; s < uc.neighbors.size(); ++s)
      dpool.row(uc.neighbors[s]) += dstack.col(static_cast<Eigen::Index>(s) + 1).transpose();
  }
  instance_fuse_backward(anchors, pool, cache.attn, dout, danchors, dpool);
}

}  // namespace

void CrossInstanceFusion::forward(const Matrix& prototypes, const Matrix& queries, Matrix& out_prototypes,
                                  Matrix& out_queries, CifCache* cache) const {
  require(prototypes.cols() == queries.cols(), ErrorCode::kInvalidArgument, "cif: width mismatch");
  if (queries.rows() < proto_branch.k1())
    fail(ErrorCode::kConfig, "cif: k1=" + std::to_string(proto_branch.k1()) + " exceeds query count " +
                                 std::to_string(queries.rows()));
  // One logit map serves both sides: the query side reads its transpose.
  const Matrix logits = cross_logits(prototypes, queries);
  Matrix p = fuse_side(proto_branch, prototypes, queries, logits, cache ? &cache->proto_side : nullptr);
  Matrix q = fuse_side(query_branch, queries, prototypes, logits.transpose(), cache ? &cache->query_side : nullptr);
  if (cache) {
    cache->logits = logits;
    cache->prototypes = prototypes;
    cache->queries = queries;
  }
  out_prototypes = std::move(p);
  out_queries = std::move(q);
}

void CrossInstanceFusion::backward(const CifCache& cache, const Matrix& dproto_out, const Matrix& dquery_out,
                                   Matrix& dprototypes, Matrix& dqueries) {
  dprototypes = Matrix::Zero(cache.prototypes.rows(), cache.prototypes.cols());
  dqueries = Matrix::Zero(cache.queries.rows(), cache.queries.cols());
  fuse_side_backward(proto_branch, cache.proto_side, cache.prototypes, cache.queries, dproto_out, dprototypes,
                     dqueries);
  fuse_side_backward(query_branch, cache.query_side, cache.queries, cache.prototypes, dquery_out, dqueries,
                     dprototypes);
}

void CrossInstanceFusion::register_params(ParamRegistry& reg, const std::string& prefix) {
  proto_branch.register_params(reg, prefix + ".proto");
  query_branch.register_params(reg, prefix + ".query");
}

}  // namespace pcfsl
