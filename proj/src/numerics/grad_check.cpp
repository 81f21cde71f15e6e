// Copyright 2026 The KFDS Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cmath>
#include <string>

#include "kfds/numerics.hpp"

namespace kfds {

GradCheckReport finite_diff_check(const ScalarFn& f, const Matrix& analytic,
                                  const Matrix& point,
                                  GradCheckOptions options) {
  if (options.step <= 0.0) throw Error("finite difference step must be > 0");
  if (analytic.rows() != point.rows() || analytic.cols() != point.cols()) {
    throw Error("analytic gradient shape does not match the probe point");
  }
  GradCheckReport report;
  Matrix probe = point;
  const double h = options.step;
  for (std::size_t r = 0; r < point.rows(); ++r) {
    for (std::size_t c = 0; c < point.cols(); ++c) {
      const double x0 = point(r, c);
      probe(r, c) = x0 + h;
      const double up = f(probe);
      probe(r, c) = x0 - h;
      const double down = f(probe);
      probe(r, c) = x0;
      if (!std::isfinite(up) || !std::isfinite(down)) {
        throw Error("function is non-finite when probing coordinate (" +
                    std::to_string(r) + ", " + std::to_string(c) + ")");
      }
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic(r, c);
      const double denom =
          std::max({std::abs(a), std::abs(numeric), 1e-12});
      const double rel = std::abs(a - numeric) / denom;
      if (rel > report.max_relative_error) {
        report.max_relative_error = rel;
        report.worst_coordinate = {r, c};
      }
    }
  }
  report.passed = report.max_relative_error <= options.tolerance;
  return report;
}

}  // namespace kfds
