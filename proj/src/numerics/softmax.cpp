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

#include "kfds/numerics.hpp"
#include "kfds/simd.hpp"

namespace kfds {
namespace {

void require_finite(const Matrix& logits) {
  if (!logits.all_finite()) throw Error("non-finite logits");
}

}  // namespace

Matrix softmax_rows(const Matrix& logits) {
  require_finite(logits);
  const auto& k = simd::active();
  Matrix out = logits;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    if (row.empty()) continue;
    const double m = k.max(row.data(), row.size());
    for (double& v : row) v = std::exp(v - m);
    const double z = k.sum(row.data(), row.size());
    k.scale(1.0 / z, row.data(), row.size());
    // Keep the strict-positivity promise when a logit is ~750 below the max.
    for (double& v : row) v = std::max(v, std::numeric_limits<double>::min());
  }
  return out;
}

Matrix log_softmax_rows(const Matrix& logits) {
  require_finite(logits);
  Matrix out = logits;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    if (row.empty()) continue;
    const double lse = log_sum_exp(row);
    for (double& v : row) v -= lse;
  }
  return out;
}

double log_sum_exp(std::span<const double> values) {
  if (values.empty()) throw Error("log_sum_exp of an empty list");
  const double m = *std::max_element(values.begin(), values.end());
  if (m == kNegInf) return kNegInf;
  if (std::isinf(m)) return m;
  double acc = 0.0;
  for (double v : values) acc += std::exp(v - m);
  return m + std::log(acc);
}

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

}  // namespace kfds
