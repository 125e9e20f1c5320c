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

#include <functional>
#include <string>
#include <vector>

#include "pcfsl/common.hpp"

namespace pcfsl {

struct GradTarget {
  std::string name;
  Matrix* value;  // perturbed in place, restored afterwards
  Matrix grad;    // analytic gradient of the loss w.r.t. *value
};

struct GradCheckOptions {
  double step = 1e-6;
  double tolerance = 1e-4;
  /// Denominator floor of the relative error.
  double floor = 1e-4;
};

struct GradCheckResult {
  std::string name;
  double max_rel_error = 0.0;
  std::string worst_entry;
  std::size_t checked = 0;
  /// Entries sitting on a kink or selection boundary of max / top-k, where
  /// the one-sided differences disagree and one of them matches the analytic
  /// value.
  std::size_t skipped = 0;
  bool passed = true;
};

/// |a - n| / max(|a|, |n|, floor).
double relative_error(double analytic, double numeric, double floor = 1e-4);

/// Compares each analytic gradient entry with the central difference of
/// `loss` (recomputed from scratch at every perturbation).
GradCheckResult check_gradients(const std::string& name, const std::function<double()>& loss,
                                std::vector<GradTarget> targets, const GradCheckOptions& options = {});

}  // namespace pcfsl
