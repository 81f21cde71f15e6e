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
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "kfds/losses.hpp"
#include "kfds/verify.hpp"

namespace kfds::loss {
namespace {

constexpr Token a = 1;
constexpr Token b = 2;

Matrix log_one_hot(const std::vector<Token>& labels, std::size_t V) {
  Matrix m(labels.size(), V, kNegInf);
  for (std::size_t t = 0; t < labels.size(); ++t) m(t, labels[t]) = 0.0;
  return m;
}

Matrix one_hot(const std::vector<Token>& labels, std::size_t V) {
  Matrix m(labels.size(), V, 0.0);
  for (std::size_t t = 0; t < labels.size(); ++t) m(t, labels[t]) = 1.0;
  return m;
}

TEST(Til, HandExample) {
  // Y' = {a: 2}, P'_a = 0.5 + 0.5 = 1
  const LossResult r = til(Matrix(2, 2, 0.5), {{a, a}});
  EXPECT_NEAR(r.value, 2.0 * std::log(2.0), 1e-12);
  // d/dP'_a of 2 ln(2/P'_a) = -2 / P'_a, the same for each frame.
  EXPECT_NEAR(r.grad(0, 1), -2.0, 1e-12);
  EXPECT_NEAR(r.grad(1, 1), -2.0, 1e-12);
  EXPECT_EQ(r.grad(0, 0), 0.0);
}

TEST(Til, ZeroOnPermutedOneHots) {
  std::mt19937_64 rng(5);
  for (int n = 0; n < 100; ++n) {
    const LabelSequence y = verify::random_target(rng, 6, 5);
    std::vector<Token> rows = y.tokens;
    std::shuffle(rows.begin(), rows.end(), rng);
    ASSERT_EQ(til(one_hot(rows, 5), y).value, 0.0);
  }
}

TEST(Til, BitIdenticalUnderPermutation) {
  std::mt19937_64 rng(6);
  for (int n = 0; n < 200; ++n) {
    const Matrix p = softmax_rows(verify::random_matrix(rng, 9, 6, 2.0));
    LabelSequence y = verify::random_target(rng, 5, 6);
    const double base = til(p, y).value;
    std::vector<std::size_t> order(9);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::shuffle(y.tokens.begin(), y.tokens.end(), rng);
    ASSERT_EQ(til(p.gather_rows(order), y).value, base);
  }
}

TEST(Til, FloorKeepsValueFinite) {
  // No mass at all on the target class.
  const LossResult r = til(one_hot({0, 0}, 3), {{b}});
  EXPECT_NEAR(r.value, std::log(1.0 / kTilFloor), 1e-9);
  EXPECT_TRUE(std::isfinite(r.value));
  EXPECT_TRUE(r.grad.all_finite());
}

TEST(Til, CanBeNegativeWhenFramesOutnumberTargets) {
  // Unnormalized sums: P'_a = 2 > Y'_a = 1.
  EXPECT_LT(til(Matrix::from_rows({{0.0 + 1e-9, 1.0 - 1e-9},
                                    {1e-9, 1.0 - 1e-9}}),
                {{a}})
                .value,
            0.0);
}

TEST(Axe, SingleFrame) {
  const LossResult r = axe(log_one_hot({a}, 3), {{a}});
  EXPECT_EQ(r.value, 0.0);
  ASSERT_TRUE(r.alignment.has_value());
  EXPECT_EQ(r.alignment->target_to_pred, (std::vector<std::size_t>{0}));
  EXPECT_TRUE(r.alignment->epsilon_positions.empty());
}

TEST(Axe, InOrderOneHotsAndPositionalCe) {
  const std::vector<Token> y{a, b, b, a};
  const Matrix lp = log_one_hot(y, 3);
  EXPECT_EQ(axe(lp, {y}).value, 0.0);
  EXPECT_EQ(positional_ce(lp, {y}).value, 0.0);
}

TEST(Axe, BlankFramesPayEpsilon) {
  // Two predictions, one target: the unused frame pays -log p(blank).
  const Matrix lp = Matrix::from_rows(
      {{std::log(0.5), std::log(0.5)}, {std::log(0.9), std::log(0.1)}});
  const LossResult r = axe(lp, {{a}});
  EXPECT_NEAR(r.value, -std::log(0.5) - std::log(0.9), 1e-12);
  EXPECT_EQ(r.alignment->target_to_pred, (std::vector<std::size_t>{0}));
  EXPECT_EQ(r.alignment->epsilon_positions, (std::vector<std::size_t>{1}));
}

TEST(Axe, MoreTargetsThanPredictions) {
  // Both targets land on the single prediction.
  const Matrix lp = Matrix::from_rows({{std::log(0.2), std::log(0.8)}});
  const LossResult r = axe(lp, {{a, a}});
  EXPECT_NEAR(r.value, -2.0 * std::log(0.8), 1e-12);
  EXPECT_EQ(r.alignment->target_to_pred, (std::vector<std::size_t>{0, 0}));
}

TEST(Axe, OracleSuite) {
  const verify::SuiteResult r = verify::axe_oracle_suite(123, 100);
  EXPECT_TRUE(r.ok()) << (r.failures.empty() ? "" : r.failures.front());
}

TEST(Axe, PathCostMatchesValue) {
  std::mt19937_64 rng(31);
  for (int n = 0; n < 200; ++n) {
    std::uniform_int_distribution<std::size_t> len(1, 8);
    const std::size_t T = len(rng), L = len(rng);
    const Matrix lp = verify::random_log_probs(rng, T, 5);
    const LabelSequence y = verify::random_target(rng, L, 5);
    const LossResult r = axe(lp, y);
    ASSERT_TRUE(r.alignment.has_value());
    const auto& m = r.alignment->target_to_pred;
    ASSERT_EQ(m.size(), L);
    ASSERT_TRUE(std::is_sorted(m.begin(), m.end()));
    ASSERT_LT(m.back(), T);
    ASSERT_NEAR(alignment_cost(lp, y, *r.alignment), r.value, 1e-9);
    const Matrix g = alignment_cost_grad(T, 5, y, *r.alignment);
    ASSERT_EQ(g, r.grad);
  }
}

TEST(Axe, NeverExceedsPositionalCe) {
  std::mt19937_64 rng(41);
  for (int n = 0; n < 200; ++n) {
    std::uniform_int_distribution<std::size_t> len(1, 7);
    const std::size_t L = len(rng);
    const Matrix lp = verify::random_log_probs(rng, L, 5);
    const LabelSequence y = verify::random_target(rng, L, 5);
    ASSERT_LE(axe(lp, y).value, positional_ce(lp, y).value + 1e-12);
  }
}

TEST(Axe, ShiftedPredictionsBeatPositionalCe) {
  // Predictions are the target shifted one frame later.
  const double hi = std::log(0.9), lo = std::log(0.05);
  const Matrix lp = Matrix::from_rows(
      {{hi, lo, lo}, {lo, hi, lo}, {lo, lo, hi}});
  const LabelSequence y{{a, b, b}};
  EXPECT_LT(axe(lp, y).value, positional_ce(lp, y).value - 1.0);
}

TEST(AlignmentCost, RejectsInvalidPaths) {
  const Matrix lp(3, 3, std::log(1.0 / 3.0));
  EXPECT_THROW(alignment_cost(lp, {{a, b}}, make_path({2, 1}, 3)), Error);
  EXPECT_THROW(alignment_cost(lp, {{a, b}}, make_path({0, 3}, 4)), Error);
  EXPECT_THROW(alignment_cost(lp, {{a}}, make_path({0, 1}, 3)), Error);
}

TEST(MakePath, EpsilonComplement) {
  const AlignmentPath p = make_path({1, 1, 3}, 5);
  EXPECT_EQ(p.epsilon_positions, (std::vector<std::size_t>{0, 2, 4}));
}

TEST(PositionalCe, UniformRows) {
  const LossResult r = positional_ce(Matrix(4, 5, std::log(0.2)), {{1, 2, 3, 4}});
  EXPECT_NEAR(r.value, 4.0 * std::log(5.0), 1e-12);
}

TEST(PositionalCe, LengthMismatch) {
  try {
    positional_ce(Matrix(3, 3, std::log(1.0 / 3.0)), {{a, b}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "positional CE requires equal lengths");
  }
}

TEST(JointObjective, Examples) {
  const JointWeights w;
  EXPECT_NEAR(joint_objective(1, 1, 1, w), 1.0, 1e-15);
  EXPECT_EQ(joint_objective(3, 4, 5, JointWeights{0, 0, 0}), 0.0);
  EXPECT_NEAR(joint_objective(10, 0, 0, w), 2.0, 1e-15);
}

TEST(JointObjective, LinearInEachTerm) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  const JointWeights w{u(rng), u(rng), u(rng)};
  const double x = u(rng), y = u(rng), z = u(rng), dx = u(rng);
  EXPECT_NEAR(joint_objective(x + dx, y, z, w) - joint_objective(x, y, z, w),
              w.alpha0 * dx, 1e-12);
  EXPECT_NEAR(joint_objective(x, y + dx, z, w) - joint_objective(x, y, z, w),
              w.alpha1 * dx, 1e-12);
  EXPECT_NEAR(joint_objective(x, y, z + dx, w) - joint_objective(x, y, z, w),
              w.alpha2 * dx, 1e-12);
}

TEST(LossGradients, FiniteDifferenceSuitesPass) {
  for (const auto& s : verify::gradient_suites(88, 10)) {
    EXPECT_TRUE(s.ok()) << s.name << ": "
                        << (s.failures.empty() ? "" : s.failures.front());
    EXPECT_LE(s.max_error, 1e-4) << s.name;
  }
}

TEST(Suites, TilPropertiesAndAxeVsCe) {
  EXPECT_TRUE(verify::til_properties_suite(5, 50).ok());
  EXPECT_TRUE(verify::axe_vs_ce_suite(6, 50).ok());
}

}  // namespace
}  // namespace kfds::loss
