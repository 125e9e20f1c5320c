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
#include <utility>
#include <vector>

#include "pcfsl/common.hpp"

namespace pcfsl {

/// A tensor with its accumulated gradient. Buffers (running statistics) are
/// stored the same way but skipped by the optimizer.
struct Param {
  Matrix value;
  Matrix grad;
  bool trainable = true;

  Param() = default;
  Param(Eigen::Index rows, Eigen::Index cols, bool is_trainable = true)
      : value(Matrix::Zero(rows, cols)), grad(Matrix::Zero(rows, cols)), trainable(is_trainable) {}

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

/// Flat name -> tensor view of a model, used by the optimizer, checkpoints
/// and gradient checks.
class ParamRegistry {
 public:
  void add(std::string name, Param& p) { entries_.emplace_back(std::move(name), &p); }

  const std::vector<std::pair<std::string, Param*>>& entries() const { return entries_; }
  std::vector<Param*> trainable() const;
  Param* find(const std::string& name) const;
  void zero_grad() const;
  std::size_t trainable_count() const;

 private:
  std::vector<std::pair<std::string, Param*>> entries_;
};

}  // namespace pcfsl
