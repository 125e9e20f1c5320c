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
#include <string_view>
#include <vector>

#include "pcfsl/nn/param.hpp"

namespace pcfsl {

enum class Metric { kSqEuclid, kCosine };

std::string_view metric_name(Metric m);
Metric parse_metric(std::string_view name);

/// Per-class mean of class-major support features (n_way * k_shot rows).
Matrix prototypes_from_support(const Matrix& support, int n_way, int k_shot);
/// Gradient of prototypes_from_support.
Matrix prototypes_backward(const Matrix& dprototypes, int k_shot);

/// queries x prototypes logits: -|q - p|^2, or tau * cos(q, p) (0 for zero norms).
Matrix score(const Matrix& queries, const Matrix& prototypes, Metric metric, Real tau);

struct ScoreGrad {
  Matrix dqueries;
  Matrix dprototypes;
  Real dtau = 0.0;
};
ScoreGrad score_backward(const Matrix& queries, const Matrix& prototypes, Metric metric, Real tau,
                         const Matrix& dlogits);

/// Mean cross-entropy over the rows of `logits`.
Real episode_loss(const Matrix& logits, const std::vector<int>& labels);
/// d(loss)/d(logits).
Matrix episode_loss_backward(const Matrix& logits, const std::vector<int>& labels);

/// Row-wise argmax, ties to the lower class index.
std::vector<int> predict(const Matrix& logits);

/// Metric head with its single learnable scale (used by the cosine metric).
class MetricHead {
 public:
  MetricHead() = default;
  MetricHead(Metric metric, Real tau_init);

  Matrix forward(const Matrix& queries, const Matrix& prototypes) const;
  ScoreGrad backward(const Matrix& queries, const Matrix& prototypes, const Matrix& dlogits);

  Metric metric() const { return metric_; }
  Real tau() const { return tau_.value(0, 0); }
  void register_params(ParamRegistry& reg, const std::string& prefix);

 private:
  Metric metric_ = Metric::kSqEuclid;
  Param tau_{1, 1};
};

}  // namespace pcfsl
