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

#include "pcfsl/verify/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace pcfsl {

double relative_error(double analytic, double numeric, double floor) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

GradCheckResult check_gradients(const std::string& name, const std::function<double()>& loss,
                                std::vector<GradTarget> targets, const GradCheckOptions& options) {
  GradCheckResult result;
  result.name = name;
  const double h = options.step;
  for (auto& t : targets) {
    require(t.value && t.value->rows() == t.grad.rows() && t.value->cols() == t.grad.cols(), ErrorCode::kInternal,
            "gradient target " + t.name + " has mismatched shape");
    Matrix& x = *t.value;
    for (Eigen::Index r = 0; r < x.rows(); ++r)
      for (Eigen::Index c = 0; c < x.cols(); ++c) {
        const double saved = x(r, c);
        x(r, c) = saved + h;
        const double up = loss();
        x(r, c) = saved - h;
        const double down = loss();
        x(r, c) = saved;
        const double analytic = t.grad(r, c);
        const double numeric = (up - down) / (2.0 * h);
        double err = relative_error(analytic, numeric, options.floor);
        if (err >= options.tolerance) {
          const double mid = loss();
          const double right = (up - mid) / h, left = (mid - down) / h;
          const bool kink = relative_error(left, right, options.floor) > 1e-3;
          const bool one_sided = relative_error(analytic, left, options.floor) < 1e-3 ||
                                 relative_error(analytic, right, options.floor) < 1e-3;
          if (kink && one_sided) {
            ++result.skipped;
            continue;
          }
        }
        ++result.checked;
        if (err > result.max_rel_error || !std::isfinite(err)) {
          result.max_rel_error = std::isfinite(err) ? err : std::numeric_limits<double>::infinity();
          std::ostringstream os;
          os << t.name << "(" << r << "," << c << ") analytic " << analytic << " numeric " << numeric;
          result.worst_entry = os.str();
        }
      }
  }
  result.passed = result.max_rel_error < options.tolerance && result.checked > 0;
  return result;
}

}  // namespace pcfsl
