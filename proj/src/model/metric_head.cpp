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

#include "pcfsl/model/metric_head.hpp"

#include "pcfsl/nn/layers.hpp"

#include <cmath>

namespace pcfsl {

std::string_view metric_name(Metric m) { return m == Metric::kCosine ? "cosine" : "sqeuclid"; }

Metric parse_metric(std::string_view name) {
  if (name == "sqeuclid") return Metric::kSqEuclid;
  if (name == "cosine") return Metric::kCosine;
  fail(ErrorCode::kConfig, "unknown metric '" + std::string(name) + "'");
}

Matrix prototypes_from_support(const Matrix& support, int n_way, int k_shot) {
  require(n_way >= 1 && k_shot >= 1 && support.rows() == static_cast<Eigen::Index>(n_way) * k_shot,
          ErrorCode::kInvalidArgument, "prototypes: support rows must equal n_way * k_shot");
  Matrix protos(n_way, support.cols());
  for (int c = 0; c < n_way; ++c) protos.row(c) = support.middleRows(c * k_shot, k_shot).colwise().mean();
  return protos;
}

Matrix prototypes_backward(const Matrix& dprototypes, int k_shot) {
  Matrix ds(dprototypes.rows() * k_shot, dprototypes.cols());
  for (Eigen::Index c = 0; c < dprototypes.rows(); ++c)
    ds.middleRows(c * k_shot, k_shot) = dprototypes.row(c).replicate(k_shot, 1) / static_cast<Real>(k_shot);
  return ds;
}

namespace {

Eigen::VectorXd safe_inv_norms(const Matrix& x) {
  Eigen::VectorXd inv = x.rowwise().norm();
  for (Eigen::Index i = 0; i < inv.size(); ++i) inv(i) = inv(i) > 0.0 ? 1.0 / inv(i) : 0.0;
  return inv;
}

}  // namespace

Matrix score(const Matrix& queries, const Matrix& prototypes, Metric metric, Real tau) {
  require(queries.cols() == prototypes.cols(), ErrorCode::kInvalidArgument, "score: width mismatch");
  if (metric == Metric::kSqEuclid) {
    Matrix logits = 2.0 * queries * prototypes.transpose();
    logits.colwise() -= queries.rowwise().squaredNorm();
    logits.rowwise() -= prototypes.rowwise().squaredNorm().transpose();
    return logits;
  }
  const Matrix qn = safe_inv_norms(queries).asDiagonal() * queries;
  const Matrix pn = safe_inv_norms(prototypes).asDiagonal() * prototypes;
  return tau * qn * pn.transpose();
}

ScoreGrad score_backward(const Matrix& queries, const Matrix& prototypes, Metric metric, Real tau,
                         const Matrix& dlogits) {
  ScoreGrad g;
  if (metric == Metric::kSqEuclid) {
    // logit = 2 q.p - |q|^2 - |p|^2
    g.dqueries = 2.0 * dlogits * prototypes - 2.0 * (dlogits.rowwise().sum().asDiagonal() * queries);
    g.dprototypes = 2.0 * dlogits.transpose() * queries -
                    2.0 * (dlogits.colwise().sum().transpose().asDiagonal() * prototypes);
    return g;
  }
  const Eigen::VectorXd qi = safe_inv_norms(queries), pi = safe_inv_norms(prototypes);
  const Matrix qn = qi.asDiagonal() * queries;
  const Matrix pn = pi.asDiagonal() * prototypes;
  const Matrix cos = qn * pn.transpose();
  g.dtau = (dlogits.array() * cos.array()).sum();
  const Matrix dcos = tau * dlogits;
  const Matrix dqn = dcos * pn;
  const Matrix dpn = dcos.transpose() * qn;
  // d(x/|x|) = (I - x̂ x̂^T) dx / |x|
  auto through_norm = [](const Matrix& xn, const Eigen::VectorXd& inv, const Matrix& dxn) {
    Matrix dx = dxn - (dxn.array() * xn.array()).rowwise().sum().matrix().asDiagonal() * xn;
    return Matrix(inv.asDiagonal() * dx);
  };
  g.dqueries = through_norm(qn, qi, dqn);
  g.dprototypes = through_norm(pn, pi, dpn);
  return g;
}

Real episode_loss(const Matrix& logits, const std::vector<int>& labels) {
  require(static_cast<Eigen::Index>(labels.size()) == logits.rows() && logits.rows() > 0,
          ErrorCode::kInvalidArgument, "loss: label count mismatch");
  Real total = 0.0;
  for (Eigen::Index j = 0; j < logits.rows(); ++j) {
    const int y = labels[static_cast<std::size_t>(j)];
    require(y >= 0 && y < logits.cols(), ErrorCode::kInvalidArgument, "loss: label out of range");
    const Real m = logits.row(j).maxCoeff();
    const Real lse = m + std::log((logits.row(j).array() - m).exp().sum());
    total += lse - logits(j, y);
  }
  return total / static_cast<Real>(logits.rows());
}

Matrix episode_loss_backward(const Matrix& logits, const std::vector<int>& labels) {
  Matrix g = softmax_rows(logits);
  for (Eigen::Index j = 0; j < logits.rows(); ++j) g(j, labels[static_cast<std::size_t>(j)]) -= 1.0;
  return g / static_cast<Real>(logits.rows());
}

std::vector<int> predict(const Matrix& logits) {
  std::vector<int> out(static_cast<std::size_t>(logits.rows()));
  for (Eigen::Index j = 0; j < logits.rows(); ++j) {
    int best = 0;
    for (Eigen::Index i = 1; i < logits.cols(); ++i)
      if (logits(j, i) > logits(j, best)) best = static_cast<int>(i);
    out[static_cast<std::size_t>(j)] = best;
  }
  return out;
}

MetricHead::MetricHead(Metric metric, Real tau_init) : metric_(metric) { tau_.value(0, 0) = tau_init; }

Matrix MetricHead::forward(const Matrix& queries, const Matrix& prototypes) const {
  return score(queries, prototypes, metric_, tau());
}

ScoreGrad MetricHead::backward(const Matrix& queries, const Matrix& prototypes, const Matrix& dlogits) {
  ScoreGrad g = score_backward(queries, prototypes, metric_, tau(), dlogits);
  tau_.grad(0, 0) += g.dtau;
  return g;
}

void MetricHead::register_params(ParamRegistry& reg, const std::string& prefix) {
  tau_.trainable = metric_ == Metric::kCosine;
  reg.add(prefix + ".tau", tau_);
}

}  // namespace pcfsl
