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

#include <cstdint>
#include <string>
#include <vector>

namespace pcfsl {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct SuiteResult {
  std::string suite;
  std::vector<CheckResult> checks;
  double seconds = 0.0;

  bool passed() const;
  std::size_t failures() const;
};

/// Module invariants: permutation symmetries, normalizations, residual
/// identities, convex-hull recovery, split disjointness, CI arithmetic and
/// the training-loop contracts.
SuiteResult run_invariant_suite(std::uint64_t seed = 7);

/// Central finite differences against the analytic backward passes.
SuiteResult run_gradient_suite(std::uint64_t seed = 11);

/// Explicit-loop oracles on `trials` random small instances per operation.
SuiteResult run_oracle_suite(int trials = 100, std::uint64_t seed = 13);

}  // namespace pcfsl
