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

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "kfds/numerics.hpp"
#include "kfds/verify.hpp"

namespace kfds {
namespace {

TEST(SoftmaxRows, SymmetricRowIsUniform) {
  const Matrix p = softmax_rows(Matrix(1, 2, 0.0));
  EXPECT_DOUBLE_EQ(p(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(p(0, 1), 0.5);
}

TEST(SoftmaxRows, LargeLogitDoesNotOverflow) {
  const Matrix p = softmax_rows(Matrix::from_rows({{1000.0, 0.0, 0.0}}));
  EXPECT_NEAR(p(0, 0), 1.0, 1e-15);
  EXPECT_GT(p(0, 1), 0.0);
  EXPECT_LT(p(0, 1), 1e-300);
  EXPECT_TRUE(p.all_finite());
}

TEST(SoftmaxRows, LogThreeAgainstZero) {
  // e^{ln 3} / (e^{ln 3} + 1) = 3/4
  const Matrix p = softmax_rows(Matrix::from_rows({{std::log(3.0), 0.0}}));
  EXPECT_NEAR(p(0, 0), 0.75, 1e-15);
  EXPECT_NEAR(p(0, 1), 0.25, 1e-15);
}

TEST(SoftmaxRows, RejectsNonFinite) {
  const Matrix bad = Matrix::from_rows({{0.0, std::nan("")}});
  try {
    softmax_rows(bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "non-finite logits");
  }
  EXPECT_THROW(log_softmax_rows(Matrix::from_rows({{INFINITY, 0.0}})), Error);
}

TEST(SoftmaxRows, RowsSumToOneOverRandomMatrices) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<std::size_t> shape(1, 20);
  for (int k = 0; k < 1000; ++k) {
    const Matrix p =
        softmax_rows(verify::random_matrix(rng, shape(rng), shape(rng), 10.0));
    for (std::size_t r = 0; r < p.rows(); ++r) {
      double s = 0.0;
      for (double v : p.row(r)) {
        ASSERT_GT(v, 0.0);
        s += v;
      }
      ASSERT_NEAR(s, 1.0, 1e-12);
    }
  }
}

TEST(LogSumExp, Basics) {
  const double two[] = {0.0, 0.0};
  EXPECT_NEAR(log_sum_exp(two), std::log(2.0), 1e-15);
  const double with_neg_inf[] = {kNegInf, 1.5};
  EXPECT_EQ(log_sum_exp(with_neg_inf), 1.5);
  const double big[] = {700.0, 700.0};
  EXPECT_NEAR(log_sum_exp(big), 700.0 + std::log(2.0), 1e-12);
  const double all_neg_inf[] = {kNegInf, kNegInf};
  EXPECT_EQ(log_sum_exp(all_neg_inf), kNegInf);
  EXPECT_THROW(log_sum_exp(std::span<const double>{}), Error);
}

TEST(LogSumExp, BoundedByMaxAndMaxPlusLogN) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::size_t> len(1, 30);
  std::normal_distribution<double> val(0.0, 50.0);
  for (int k = 0; k < 1000; ++k) {
    std::vector<double> v(len(rng));
    for (double& x : v) x = val(rng);
    const double m = *std::max_element(v.begin(), v.end());
    const double lse = log_sum_exp(v);
    ASSERT_GE(lse, m);
    ASSERT_LE(lse, m + std::log(static_cast<double>(v.size())) + 1e-12);
  }
}

TEST(LogAdd, MatchesLogSumExp) {
  EXPECT_EQ(log_add(kNegInf, kNegInf), kNegInf);
  EXPECT_EQ(log_add(kNegInf, -3.0), -3.0);
  const double v[] = {-1.25, 2.5};
  EXPECT_NEAR(log_add(-1.25, 2.5), log_sum_exp(v), 1e-14);
}

TEST(Matmul, MatchesTripleLoop) {
  std::mt19937_64 rng(3);
  const Matrix a = verify::random_matrix(rng, 5, 7);
  const Matrix b = verify::random_matrix(rng, 7, 3);
  const Matrix c = matmul(a, b);
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < 7; ++k) s += a(i, k) * b(k, j);
      EXPECT_NEAR(c(i, j), s, 1e-13);
    }
  }
  EXPECT_THROW(matmul(a, a), Error);
}

TEST(MatrixShape, RejectsWrongDataLength) {
  EXPECT_THROW(Matrix(2, 2, std::vector<double>(3)), Error);
  EXPECT_THROW(Matrix::from_rows({{1.0}, {1.0, 2.0}}), Error);
}

TEST(FiniteDiffCheck, QuadraticIsExactToRoundoff) {
  const Matrix x = Matrix::from_rows({{1.0, 2.0}});
  auto f = [](const Matrix& m) { return m(0, 0) * m(0, 0) + m(0, 1) * m(0, 1); };
  const Matrix g = Matrix::from_rows({{2.0, 4.0}});
  const GradCheckReport r = finite_diff_check(f, g, x);
  EXPECT_LT(r.max_relative_error, 1e-8);
  EXPECT_TRUE(r.passed);
}

TEST(FiniteDiffCheck, BilinearPassesAndWrongGradientFails) {
  const Matrix x = Matrix::from_rows({{3.0, 5.0}});
  auto f = [](const Matrix& m) { return m(0, 0) * m(0, 1); };
  GradCheckOptions tight{1e-5, 1e-6};
  EXPECT_TRUE(finite_diff_check(f, Matrix::from_rows({{5.0, 3.0}}), x, tight)
                  .passed);
  const GradCheckReport bad =
      finite_diff_check(f, Matrix::from_rows({{5.0, 4.0}}), x, tight);
  EXPECT_FALSE(bad.passed);
  EXPECT_EQ(bad.worst_coordinate, (std::pair<std::size_t, std::size_t>{0, 1}));
}

TEST(FiniteDiffCheck, PolynomialsPassPerturbedGradientsFail) {
  std::mt19937_64 rng(5);
  for (int k = 0; k < 50; ++k) {
    Matrix x = verify::random_matrix(rng, 2, 3);
    for (double& v : x.data()) v = 1.0 + std::abs(v);
    // f = sum c_i x_i^3 + x_0 x_1
    // Coefficients of at least 1 keep every gradient entry away from zero.
    Matrix coef = verify::random_matrix(rng, 2, 3);
    for (double& c : coef.data()) c = 1.0 + std::abs(c);
    auto f = [&](const Matrix& m) {
      double s = m.data()[0] * m.data()[1];
      for (std::size_t i = 0; i < m.size(); ++i) {
        s += coef.data()[i] * m.data()[i] * m.data()[i] * m.data()[i];
      }
      return s;
    };
    Matrix g(2, 3);
    for (std::size_t i = 0; i < g.size(); ++i) {
      g.data()[i] = 3.0 * coef.data()[i] * x.data()[i] * x.data()[i];
    }
    g.data()[0] += x.data()[1];
    g.data()[1] += x.data()[0];
    ASSERT_TRUE(finite_diff_check(f, g, x, {1e-5, 1e-6}).passed);
    Matrix wrong = g;
    wrong.data()[k % 6] += 0.01 + std::abs(wrong.data()[k % 6]) * 0.01;
    ASSERT_FALSE(finite_diff_check(f, wrong, x, {1e-5, 1e-6}).passed);
  }
}

TEST(FiniteDiffCheck, NonFiniteProbeNamesCoordinate) {
  const Matrix x = Matrix::from_rows({{1.0, 1e-6}});
  auto f = [](const Matrix& m) { return std::log(m(0, 1)); };
  try {
    finite_diff_check(f, Matrix(1, 2), x, {1e-5, 1e-4});
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("(0, 1)"), std::string::npos);
  }
  EXPECT_THROW(finite_diff_check(f, Matrix(1, 2), x, {0.0, 1e-4}), Error);
}

}  // namespace
}  // namespace kfds
