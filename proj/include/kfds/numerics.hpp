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

#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace kfds {

// Raised for contract violations on public operations (bad shapes, invalid
// targets, non-finite inputs).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  // Builds a matrix from nested rows; all rows must have equal length.
  static Matrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) {
    return data_[r * cols_ + c];
  }
  double operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  std::span<double> row(std::size_t r) {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  // Rows selected by index, in the given order.
  Matrix gather_rows(std::span<const std::size_t> indices) const;

  bool all_finite() const;

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// out = a * b. Inner loop runs through the simd dispatch table.
Matrix matmul(const Matrix& a, const Matrix& b);

// Row-wise softmax with max subtraction. Throws Error("non-finite logits").
Matrix softmax_rows(const Matrix& logits);

// Row-wise log-softmax, same stability contract as softmax_rows.
Matrix log_softmax_rows(const Matrix& logits);

// ln(sum(exp(v))). Returns -inf when every entry is -inf; throws on empty.
double log_sum_exp(std::span<const double> values);

// ln(exp(a) + exp(b)) for two terms, tolerating -inf on either side.
double log_add(double a, double b);

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::pair<std::size_t, std::size_t> worst_coordinate{0, 0};
  bool passed = false;
};

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
};

using ScalarFn = std::function<double(const Matrix&)>;

// Compares `analytic` with central differences of `f` at `point`, one
// coordinate at a time. Relative error is |a - n| / max(|a|, |n|, 1e-12).
GradCheckReport finite_diff_check(const ScalarFn& f, const Matrix& analytic,
                                  const Matrix& point,
                                  GradCheckOptions options = {});

}  // namespace kfds
