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

#include "pcfsl/verify/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pcfsl::oracle {
namespace {

// Training-mode normalization + ReLU of a list of rows, in place.
void norm_relu(std::vector<std::vector<double>>& rows, const NormParams& norm) {
  const std::size_t out = rows.empty() ? 0 : rows[0].size();
  for (std::size_t o = 0; o < out; ++o) {
    double mean = 0.0;
    for (const auto& r : rows) mean += r[o];
    mean /= static_cast<double>(rows.size());
    double var = 0.0;
    for (const auto& r : rows) var += (r[o] - mean) * (r[o] - mean);
    var /= static_cast<double>(rows.size());
    const double inv = 1.0 / std::sqrt(var + norm.eps);
    for (auto& r : rows) r[o] = std::max(0.0, norm.gamma[o] * (r[o] - mean) * inv + norm.beta[o]);
  }
}

double sq_dist(const Matrix& x, Eigen::Index a, Eigen::Index b) {
  double s = 0.0;
  for (Eigen::Index c = 0; c < x.cols(); ++c) s += (x(a, c) - x(b, c)) * (x(a, c) - x(b, c));
  return s;
}

std::vector<int> nearest_others(const Matrix& x, int self, int count) {
  std::vector<int> idx;
  for (int j = 0; j < x.rows(); ++j)
    if (j != self) idx.push_back(j);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    const double da = sq_dist(x, self, a), db = sq_dist(x, self, b);
    return da < db || (da == db && a < b);
  });
  idx.resize(static_cast<std::size_t>(count));
  return idx;
}

}  // namespace

IndexMatrix knn(const Matrix& features, int k) {
  IndexMatrix out(features.rows(), k);
  for (int i = 0; i < features.rows(); ++i) {
    const auto nb = nearest_others(features, i, k);
    for (int t = 0; t < k; ++t) out(i, t) = nb[static_cast<std::size_t>(t)];
  }
  return out;
}

Matrix edge_conv(const Matrix& features, const IndexMatrix& neighbors, const Matrix& weight,
                 const std::vector<double>& bias, const NormParams& norm) {
  const Eigen::Index n = features.rows(), c = features.cols(), k = neighbors.cols(), out = weight.rows();
  std::vector<std::vector<double>> edges;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index t = 0; t < k; ++t) {
      const Eigen::Index j = neighbors(i, t);
      std::vector<double> e(static_cast<std::size_t>(2 * c));
      for (Eigen::Index q = 0; q < c; ++q) {
        e[static_cast<std::size_t>(q)] = features(i, q);
        e[static_cast<std::size_t>(c + q)] = features(j, q) - features(i, q);
      }
      std::vector<double> pre(static_cast<std::size_t>(out));
      for (Eigen::Index o = 0; o < out; ++o) {
        double s = bias[static_cast<std::size_t>(o)];
        for (Eigen::Index q = 0; q < 2 * c; ++q) s += weight(o, q) * e[static_cast<std::size_t>(q)];
        pre[static_cast<std::size_t>(o)] = s;
      }
      edges.push_back(std::move(pre));
    }
  norm_relu(edges, norm);
  Matrix y(n, out);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index o = 0; o < out; ++o) {
      double m = edges[static_cast<std::size_t>(i * k)][static_cast<std::size_t>(o)];
      for (Eigen::Index t = 1; t < k; ++t) m = std::max(m, edges[static_cast<std::size_t>(i * k + t)][static_cast<std::size_t>(o)]);
      y(i, o) = m;
    }
  return y;
}

std::vector<double> salient_scores(const Matrix& fmap) {
  const Eigen::Index n = fmap.rows(), d = fmap.cols();
  std::vector<double> coarse(static_cast<std::size_t>(d));
  for (Eigen::Index c = 0; c < d; ++c) {
    double m = fmap(0, c);
    for (Eigen::Index i = 1; i < n; ++i) m = std::max(m, fmap(i, c));
    coarse[static_cast<std::size_t>(c)] = m;
  }
  double cn = 0.0;
  for (double v : coarse) cn += v * v;
  cn = std::sqrt(cn);
  std::vector<double> scores(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    double dot = 0.0, rn = 0.0;
    for (Eigen::Index c = 0; c < d; ++c) {
      dot += fmap(i, c) * coarse[static_cast<std::size_t>(c)];
      rn += fmap(i, c) * fmap(i, c);
    }
    rn = std::sqrt(rn);
    scores[static_cast<std::size_t>(i)] = (rn > 0 && cn > 0) ? dot / (rn * cn) : 0.0;
  }
  return scores;
}

RowVector spf(const Matrix& fmap, int k_s, int k, const Matrix& weight, const std::vector<double>& bias,
              const NormParams& norm) {
  const Eigen::Index n = fmap.rows(), d = fmap.cols();
  std::vector<double> coarse(static_cast<std::size_t>(d));
  for (Eigen::Index c = 0; c < d; ++c) {
    double m = fmap(0, c);
    for (Eigen::Index i = 1; i < n; ++i) m = std::max(m, fmap(i, c));
    coarse[static_cast<std::size_t>(c)] = m;
  }
  const auto scores = salient_scores(fmap);
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return scores[static_cast<std::size_t>(a)] > scores[static_cast<std::size_t>(b)] ||
           (scores[static_cast<std::size_t>(a)] == scores[static_cast<std::size_t>(b)] && a < b);
  });

  std::vector<std::vector<double>> rows;
  for (int s = 0; s < k_s; ++s) {
    const int anchor = order[static_cast<std::size_t>(s)];
    std::vector<int> part = {anchor};
    for (int j : nearest_others(fmap, anchor, k - 1)) part.push_back(j);
    for (int r : part) {
      std::vector<double> pre(static_cast<std::size_t>(d));
      for (Eigen::Index o = 0; o < d; ++o) {
        double v = bias[static_cast<std::size_t>(o)];
        for (Eigen::Index c = 0; c < d; ++c) v += weight(o, c) * coarse[static_cast<std::size_t>(c)];
        for (Eigen::Index c = 0; c < d; ++c) v += weight(o, d + c) * fmap(r, c);
        pre[static_cast<std::size_t>(o)] = v;
      }
      rows.push_back(std::move(pre));
    }
  }
  norm_relu(rows, norm);
  // Max within each part, then across parts.
  RowVector out(d);
  for (Eigen::Index o = 0; o < d; ++o) {
    double across = -std::numeric_limits<double>::infinity();
    for (int s = 0; s < k_s; ++s) {
      double within = -std::numeric_limits<double>::infinity();
      for (int t = 0; t < k; ++t) within = std::max(within, rows[static_cast<std::size_t>(s * k + t)][static_cast<std::size_t>(o)]);
      across = std::max(across, within);
    }
    out(o) = across;
  }
  return out;
}

RowVector channel_fuse(const Matrix& stack, const Matrix& w1, const std::vector<double>& b1, const Matrix& w2,
                       const std::vector<double>& b2) {
  const Eigen::Index d = stack.rows(), s = stack.cols(), h = w1.rows();
  RowVector out(d);
  for (Eigen::Index c = 0; c < d; ++c) {
    std::vector<double> hidden(static_cast<std::size_t>(h));
    for (Eigen::Index u = 0; u < h; ++u) {
      double v = b1[static_cast<std::size_t>(u)];
      for (Eigen::Index q = 0; q < s; ++q) v += w1(u, q) * stack(c, q);
      hidden[static_cast<std::size_t>(u)] = v;
    }
    std::vector<double> w(static_cast<std::size_t>(s));
    double mx = -std::numeric_limits<double>::infinity();
    for (Eigen::Index q = 0; q < s; ++q) {
      double v = b2[static_cast<std::size_t>(q)];
      for (Eigen::Index u = 0; u < h; ++u) v += w2(q, u) * hidden[static_cast<std::size_t>(u)];
      w[static_cast<std::size_t>(q)] = v;
      mx = std::max(mx, v);
    }
    double z = 0.0;
    for (auto& v : w) z += (v = std::exp(v - mx));
    double acc = 0.0;
    for (Eigen::Index q = 0; q < s; ++q) acc += w[static_cast<std::size_t>(q)] / z * stack(c, q);
    out(c) = acc;
  }
  return out;
}

Matrix instance_fuse(const Matrix& p, const Matrix& q) {
  Matrix out = Matrix::Zero(p.rows(), p.cols());
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    std::vector<double> m(static_cast<std::size_t>(q.rows()));
    double mx = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < q.rows(); ++j) {
      double v = 0.0;
      for (Eigen::Index c = 0; c < p.cols(); ++c) v += p(i, c) * q(j, c);
      m[static_cast<std::size_t>(j)] = v;
      mx = std::max(mx, v);
    }
    double z = 0.0;
    for (auto& v : m) z += (v = std::exp(v - mx));
    for (Eigen::Index j = 0; j < q.rows(); ++j)
      for (Eigen::Index c = 0; c < p.cols(); ++c) out(i, c) += m[static_cast<std::size_t>(j)] / z * q(j, c);
  }
  return out;
}

Matrix score(const Matrix& queries, const Matrix& prototypes, Metric metric, double tau) {
  Matrix out(queries.rows(), prototypes.rows());
  for (Eigen::Index j = 0; j < queries.rows(); ++j)
    for (Eigen::Index i = 0; i < prototypes.rows(); ++i) {
      double dist = 0.0, dot = 0.0, qn = 0.0, pn = 0.0;
      for (Eigen::Index c = 0; c < queries.cols(); ++c) {
        const double a = queries(j, c), b = prototypes(i, c);
        dist += (a - b) * (a - b);
        dot += a * b;
        qn += a * a;
        pn += b * b;
      }
      if (metric == Metric::kSqEuclid)
        out(j, i) = -dist;
      else
        out(j, i) = (qn > 0 && pn > 0) ? tau * dot / (std::sqrt(qn) * std::sqrt(pn)) : 0.0;
    }
  return out;
}

Matrix prototypes(const Matrix& support, int n_way, int k_shot) {
  Matrix out = Matrix::Zero(n_way, support.cols());
  for (int c = 0; c < n_way; ++c)
    for (int s = 0; s < k_shot; ++s)
      for (Eigen::Index q = 0; q < support.cols(); ++q) out(c, q) += support(c * k_shot + s, q) / k_shot;
  return out;
}

double episode_loss(const Matrix& logits, const std::vector<int>& labels) {
  double total = 0.0;
  for (Eigen::Index j = 0; j < logits.rows(); ++j) {
    double z = 0.0;
    for (Eigen::Index i = 0; i < logits.cols(); ++i) z += std::exp(logits(j, i));
    total += -std::log(std::exp(logits(j, labels[static_cast<std::size_t>(j)])) / z);
  }
  return total / static_cast<double>(logits.rows());
}

}  // namespace pcfsl::oracle
