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

#include "pcfsl/nn/layers.hpp"

#include <algorithm>
#include <cmath>

namespace pcfsl {

Linear::Linear(int in, int out, Rng& rng, bool bias) : weight(out, in), bias(1, out), has_bias_(bias) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  std::uniform_real_distribution<double> u(-bound, bound);
  for (Eigen::Index i = 0; i < weight.value.size(); ++i) weight.value.data()[i] = u(rng);
  if (has_bias_)
    for (Eigen::Index i = 0; i < this->bias.value.size(); ++i) this->bias.value.data()[i] = u(rng);
}

Matrix Linear::forward(const Matrix& x) const {
  Matrix y = x * weight.value.transpose();
  if (has_bias_) y.rowwise() += bias.value.row(0);
  return y;
}

Matrix Linear::backward(const Matrix& x, const Matrix& dy) {
  weight.grad.noalias() += dy.transpose() * x;
  if (has_bias_) bias.grad.row(0) += dy.colwise().sum();
  return dy * weight.value;
}

void Linear::register_params(ParamRegistry& reg, const std::string& prefix) {
  reg.add(prefix + ".weight", weight);
  if (has_bias_) reg.add(prefix + ".bias", bias);
}

BatchNorm::BatchNorm(int channels, double momentum, double eps)
    : gamma(1, channels), beta(1, channels), running_mean(1, channels, false), running_var(1, channels, false),
      momentum_(momentum), eps_(eps) {
  gamma.value.setOnes();
  running_var.value.setOnes();
}

Matrix BatchNorm::forward(const Matrix& x, Mode mode, BatchNormCache* cache) {
  RowVector mean, var;
  if (mode == Mode::kTrain) {
    const double n = static_cast<double>(x.rows());
    mean = x.colwise().mean();
    var = (x.rowwise() - mean).array().square().colwise().sum().matrix() / n;
    const double unbias = x.rows() > 1 ? n / (n - 1.0) : 1.0;
    running_mean.value.row(0) = (1.0 - momentum_) * running_mean.value.row(0) + momentum_ * mean;
    running_var.value.row(0) = (1.0 - momentum_) * running_var.value.row(0) + momentum_ * unbias * var;
  } else {
    mean = running_mean.value.row(0);
    var = running_var.value.row(0);
  }
  const RowVector inv_std = (var.array() + eps_).rsqrt().matrix();
  Matrix xhat = (x.rowwise() - mean).array().rowwise() * inv_std.array();
  Matrix y = (xhat.array().rowwise() * gamma.value.row(0).array()).rowwise() + beta.value.row(0).array();
  if (cache) {
    cache->xhat = std::move(xhat);
    cache->inv_std = inv_std;
    cache->mode = mode;
  }
  return y;
}

Matrix BatchNorm::backward(const BatchNormCache& cache, const Matrix& dy) {
  gamma.grad.row(0) += (dy.array() * cache.xhat.array()).colwise().sum().matrix();
  beta.grad.row(0) += dy.colwise().sum();
  Matrix dxhat = dy.array().rowwise() * gamma.value.row(0).array();
  if (cache.mode == Mode::kEval) return dxhat.array().rowwise() * cache.inv_std.array();
  const double n = static_cast<double>(dy.rows());
  const RowVector sum_d = dxhat.colwise().sum();
  const RowVector sum_dx = (dxhat.array() * cache.xhat.array()).colwise().sum().matrix();
  Matrix dx = (n * dxhat.array()).rowwise() - sum_d.array();
  dx.array() -= cache.xhat.array().rowwise() * sum_dx.array();
  dx.array().rowwise() *= (cache.inv_std.array() / n);
  return dx;
}

void BatchNorm::register_params(ParamRegistry& reg, const std::string& prefix) {
  reg.add(prefix + ".gamma", gamma);
  reg.add(prefix + ".beta", beta);
  reg.add(prefix + ".running_mean", running_mean);
  reg.add(prefix + ".running_var", running_var);
}

DenseBlock::DenseBlock(int in, int out, Rng& rng) : linear(in, out, rng), norm(out) {}

Matrix DenseBlock::forward(const Matrix& x, Mode mode, DenseBlockCache* cache) {
  Matrix y = relu(norm.forward(linear.forward(x), mode, cache ? &cache->norm : nullptr));
  if (cache) {
    cache->input = x;
    cache->output = y;
  }
  return y;
}

Matrix DenseBlock::backward(const DenseBlockCache& cache, const Matrix& dy) {
  return linear.backward(cache.input, norm.backward(cache.norm, relu_backward(cache.output, dy)));
}

void DenseBlock::register_params(ParamRegistry& reg, const std::string& prefix) {
  linear.register_params(reg, prefix + ".linear");
  norm.register_params(reg, prefix + ".norm");
}

Matrix relu(const Matrix& x) { return x.cwiseMax(0.0); }

Matrix relu_backward(const Matrix& y, const Matrix& dy) { return (y.array() > 0.0).select(dy, 0.0); }

Matrix softmax_rows(const Matrix& x) {
  Matrix s = x.colwise() - x.rowwise().maxCoeff();
  s = s.array().exp();
  s.array().colwise() /= s.rowwise().sum().array();
  return s;
}

Matrix softmax_rows_backward(const Matrix& s, const Matrix& ds) {
  const Eigen::VectorXd dot = (s.array() * ds.array()).rowwise().sum();
  return s.array() * (ds.array().colwise() - dot.array());
}

Matrix gather_max_norm(const Matrix& a, const Matrix& c, const IndexMatrix& gather, BatchNorm& norm, Mode mode,
                       GatherMaxCache* cache) {
  const Eigen::Index m = a.rows(), out = a.cols(), k = gather.cols();
  require(c.cols() == out && gather.rows() == m && k >= 1 && norm.channels() == out, ErrorCode::kInvalidArgument,
          "gather_max_norm: shape mismatch");
  const Real* cd = c.data();
  Matrix gsum = Matrix::Zero(m, out);
  RowVector gsq = RowVector::Zero(out);
  for (Eigen::Index i = 0; i < m; ++i) {
    Real* gs = gsum.data() + i * out;
    for (Eigen::Index t = 0; t < k; ++t) {
      const Real* cr = cd + static_cast<Eigen::Index>(gather(i, t)) * out;
      Real* sq = gsq.data();
      for (Eigen::Index o = 0; o < out; ++o) {
        gs[o] += cr[o];
        sq[o] += cr[o] * cr[o];
      }
    }
  }

  RowVector mean, var;
  const Real pairs = static_cast<Real>(m * k);
  if (mode == Mode::kTrain) {
    mean = (static_cast<Real>(k) * a.colwise().sum() + gsum.colwise().sum()) / pairs;
    // sum over pairs of (a_i - mean + c_j)^2
    const Matrix ac = a.rowwise() - mean;
    const RowVector sq = static_cast<Real>(k) * ac.array().square().colwise().sum().matrix() +
                         2.0 * (ac.array() * gsum.array()).colwise().sum().matrix() + gsq;
    var = (sq / pairs).cwiseMax(0.0);
    const Real unbias = pairs > 1 ? pairs / (pairs - 1.0) : 1.0;
    const Real mom = norm.momentum();
    norm.running_mean.value.row(0) = (1.0 - mom) * norm.running_mean.value.row(0) + mom * mean;
    norm.running_var.value.row(0) = (1.0 - mom) * norm.running_var.value.row(0) + mom * unbias * var;
  } else {
    mean = norm.running_mean.value.row(0);
    var = norm.running_var.value.row(0);
  }
  const RowVector inv_std = (var.array() + norm.eps()).rsqrt().matrix();
  const RowVector scale = norm.gamma.value.row(0).cwiseProduct(inv_std);

  // Orient every channel so the winner is the largest oriented value; ties go
  // to the lower slot.
  RowVector sign(out);
  for (Eigen::Index o = 0; o < out; ++o) sign(o) = scale(o) > 0.0 ? 1.0 : (scale(o) < 0.0 ? -1.0 : 0.0);
  Matrix y(m, out);
  IndexMatrix arg(m, out);
  RowVector best(out);
  for (Eigen::Index i = 0; i < m; ++i) {
    int* ar = arg.data() + i * out;
    const Real* c0 = cd + static_cast<Eigen::Index>(gather(i, 0)) * out;
    for (Eigen::Index o = 0; o < out; ++o) {
      best(o) = c0[o] * sign(o);
      ar[o] = 0;
    }
    for (Eigen::Index t = 1; t < k; ++t) {
      const Real* cr = cd + static_cast<Eigen::Index>(gather(i, t)) * out;
      const int ti = static_cast<int>(t);
      for (Eigen::Index o = 0; o < out; ++o) {
        const Real u = cr[o] * sign(o);
        const bool better = u > best(o);
        best(o) = better ? u : best(o);
        ar[o] = better ? ti : ar[o];
      }
    }
    const Real* ai = a.data() + i * out;
    Real* yi = y.data() + i * out;
    for (Eigen::Index o = 0; o < out; ++o) {
      const Real pre = ai[o] + best(o) * sign(o);
      yi[o] = std::max<Real>(0.0, scale(o) * (pre - mean(o)) + norm.beta.value(0, o));
    }
  }
  if (cache) {
    cache->gather = gather;
    cache->a = a;
    cache->c = c;
    cache->gather_sum = std::move(gsum);
    cache->mean = mean;
    cache->inv_std = inv_std;
    cache->mode = mode;
    cache->output = y;
    cache->argmax = std::move(arg);
  }
  return y;
}

void gather_max_norm_backward(const GatherMaxCache& cache, BatchNorm& norm, const Matrix& dy, Matrix& da, Matrix& dc) {
  const Eigen::Index m = cache.a.rows(), rows = cache.c.rows(), out = cache.a.cols(), k = cache.gather.cols();
  const RowVector& gamma = norm.gamma.value.row(0);
  const RowVector& inv = cache.inv_std;

  // Only the winning pair of each (row, channel) receives gradient directly.
  Matrix dwin(m, out), xwin(m, out);
  IndexMatrix wrow(m, out);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index o = 0; o < out; ++o) {
      const int j = cache.gather(i, cache.argmax(i, o));
      wrow(i, o) = j;
      dwin(i, o) = cache.output(i, o) > 0.0 ? dy(i, o) : 0.0;
      xwin(i, o) = (cache.a(i, o) + cache.c(j, o) - cache.mean(o)) * inv(o);
    }
  norm.gamma.grad.row(0) += (dwin.array() * xwin.array()).colwise().sum().matrix();
  norm.beta.grad.row(0) += dwin.colwise().sum();
  const Matrix dxhat = dwin.array().rowwise() * gamma.array();

  dc = Matrix::Zero(rows, out);
  if (cache.mode == Mode::kEval) {
    da = dxhat.array().rowwise() * inv.array();
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index o = 0; o < out; ++o) dc(wrow(i, o), o) += da(i, o);
    return;
  }
  // For every pair e: dpre_e = inv * (dxhat_e - m1 - xhat_e * m2).
  const Real pairs = static_cast<Real>(m * k);
  const RowVector m1 = dxhat.colwise().sum() / pairs;
  const RowVector m2 = (dxhat.array() * xwin.array()).colwise().sum().matrix() / pairs;
  const Matrix xsum_row =
      ((static_cast<Real>(k) * (cache.a.rowwise() - cache.mean) + cache.gather_sum).array().rowwise() * inv.array())
          .matrix();
  da = ((dxhat.rowwise() - static_cast<Real>(k) * m1) - (xsum_row.array().rowwise() * m2.array()).matrix())
           .array()
           .rowwise() *
       inv.array();

  Eigen::VectorXd count = Eigen::VectorXd::Zero(rows);
  Matrix asum = Matrix::Zero(rows, out);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index t = 0; t < k; ++t) {
      const int j = cache.gather(i, t);
      count(j) += 1.0;
      asum.row(j) += cache.a.row(i);
    }
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index o = 0; o < out; ++o) dc(wrow(i, o), o) += dxhat(i, o);
  for (Eigen::Index j = 0; j < rows; ++j) {
    const Real cnt = count(j);
    if (cnt == 0.0) continue;
    for (Eigen::Index o = 0; o < out; ++o) {
      const Real xsum = (asum(j, o) + cnt * (cache.c(j, o) - cache.mean(o))) * inv(o);
      dc(j, o) = inv(o) * (dc(j, o) - cnt * m1(o) - xsum * m2(o));
    }
  }
}

}  // namespace pcfsl
