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

#include "pcfsl/nn/param.hpp"
#include "pcfsl/rng.hpp"

namespace pcfsl {

/// y = x W^T + b, applied to every row of x.
class Linear {
 public:
  Linear() = default;
  /// PyTorch-style default init: W, b ~ U(-1/sqrt(in), 1/sqrt(in)).
  Linear(int in, int out, Rng& rng, bool bias = true);

  Matrix forward(const Matrix& x) const;
  /// Accumulates dW, db; returns dx.
  Matrix backward(const Matrix& x, const Matrix& dy);

  int in_features() const { return static_cast<int>(weight.value.cols()); }
  int out_features() const { return static_cast<int>(weight.value.rows()); }
  bool has_bias() const { return has_bias_; }
  void register_params(ParamRegistry& reg, const std::string& prefix);

  Param weight;  // out x in
  Param bias;    // 1 x out

 private:
  bool has_bias_ = true;
};

struct BatchNormCache {
  Matrix xhat;
  RowVector inv_std;
  Mode mode = Mode::kEval;
};

/// Per-channel normalization over all rows of the input. Training mode uses
/// batch statistics and updates the running estimates; evaluation mode uses
/// the running estimates.
class BatchNorm {
 public:
  BatchNorm() = default;
  explicit BatchNorm(int channels, double momentum = 0.1, double eps = 1e-5);

  Matrix forward(const Matrix& x, Mode mode, BatchNormCache* cache);
  Matrix backward(const BatchNormCache& cache, const Matrix& dy);

  int channels() const { return static_cast<int>(gamma.value.cols()); }
  double eps() const { return eps_; }
  double momentum() const { return momentum_; }
  void register_params(ParamRegistry& reg, const std::string& prefix);

  Param gamma, beta;
  Param running_mean, running_var;

 private:
  double momentum_ = 0.1;
  double eps_ = 1e-5;
};

struct DenseBlockCache {
  Matrix input;
  BatchNormCache norm;
  Matrix output;
};

/// Linear -> BatchNorm -> ReLU on every row.
class DenseBlock {
 public:
  DenseBlock() = default;
  DenseBlock(int in, int out, Rng& rng);

  Matrix forward(const Matrix& x, Mode mode, DenseBlockCache* cache);
  Matrix backward(const DenseBlockCache& cache, const Matrix& dy);

  int in_features() const { return linear.in_features(); }
  int out_features() const { return linear.out_features(); }
  void register_params(ParamRegistry& reg, const std::string& prefix);

  Linear linear;
  BatchNorm norm;
};

struct GatherMaxCache {
  IndexMatrix gather;
  Matrix a;           // m x out
  Matrix c;           // rows x out
  Matrix gather_sum;  // m x out, sum of the gathered c rows
  RowVector mean;
  RowVector inv_std;
  Mode mode = Mode::kEval;
  Matrix output;       // m x out, post-ReLU
  IndexMatrix argmax;  // m x out, winning gather slot per channel (ties to the lower slot)
};

/// y(i, o) = max over t of ReLU(BN(a(i) + c(gather(i, t))))(o), with batch
/// statistics over all m * k gathered pairs. Equivalent to materializing the
/// m * k pair rows, normalizing, rectifying and max-pooling per row of `a`,
/// without forming them: the per-channel map is monotone, so the winner is
/// the largest (or, for a negative scale, smallest) gathered c.
Matrix gather_max_norm(const Matrix& a, const Matrix& c, const IndexMatrix& gather, BatchNorm& norm, Mode mode,
                       GatherMaxCache* cache);
/// Accumulates the normalization parameter gradients; returns da and dc.
void gather_max_norm_backward(const GatherMaxCache& cache, BatchNorm& norm, const Matrix& dy, Matrix& da, Matrix& dc);

Matrix relu(const Matrix& x);
/// Gradient through ReLU given its output.
Matrix relu_backward(const Matrix& y, const Matrix& dy);

/// Numerically stable softmax of each row.
Matrix softmax_rows(const Matrix& x);
/// Given s = softmax_rows(x) and ds, returns dx.
Matrix softmax_rows_backward(const Matrix& s, const Matrix& ds);

}  // namespace pcfsl
