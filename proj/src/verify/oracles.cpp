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
#include <limits>

#include "kfds/verify.hpp"

namespace kfds::verify {

double ctc_by_enumeration(const Matrix& log_probs, const LabelSequence& target) {
  const std::size_t T = log_probs.rows();
  const std::size_t V = log_probs.cols();
  std::vector<std::size_t> digits(T, 0);
  std::vector<double> matching;
  std::vector<Token> collapsed;
  while (true) {
    collapsed.clear();
    for (std::size_t t = 0; t < T; ++t) {
      const auto sym = static_cast<Token>(digits[t]);
      const bool repeat = t > 0 && digits[t] == digits[t - 1];
      if (!repeat && sym != kBlank) collapsed.push_back(sym);
    }
    if (collapsed == target.tokens) {
      double lp = 0.0;
      for (std::size_t t = 0; t < T; ++t) lp += log_probs(t, digits[t]);
      matching.push_back(lp);
    }
    std::size_t pos = 0;
    while (pos < T && ++digits[pos] == V) digits[pos++] = 0;
    if (pos == T) break;
  }
  if (matching.empty()) return std::numeric_limits<double>::infinity();
  const double m = *std::max_element(matching.begin(), matching.end());
  if (m == -std::numeric_limits<double>::infinity()) {
    return std::numeric_limits<double>::infinity();
  }
  double acc = 0.0;
  for (double v : matching) acc += std::exp(v - m);
  return -(m + std::log(acc));
}

AlignmentOracle axe_by_enumeration(const Matrix& log_probs,
                                   const LabelSequence& target) {
  const std::size_t T = log_probs.rows();
  const std::size_t L = target.size();
  const double inf = std::numeric_limits<double>::infinity();
  AlignmentOracle out{inf, inf, 0};
  std::vector<std::size_t> map(L, 0);
  while (true) {
    std::vector<bool> used(T, false);
    double cost = 0.0;
    for (std::size_t i = 0; i < L; ++i) {
      used[map[i]] = true;
      cost -= log_probs(map[i], target.tokens[i]);
    }
    for (std::size_t k = 0; k < T; ++k) {
      if (!used[k]) cost -= log_probs(k, kBlank);
    }
    ++out.alignments;
    if (cost < out.best) {
      out.second_best = out.best;
      out.best = cost;
    } else if (cost < out.second_best) {
      out.second_best = cost;
    }
    // Next non-decreasing sequence in lexicographic order.
    std::size_t i = L;
    while (i > 0 && map[i - 1] == T - 1) --i;
    if (i == 0) break;
    const std::size_t v = map[i - 1] + 1;
    for (std::size_t k = i - 1; k < L; ++k) map[k] = v;
  }
  return out;
}

namespace {

std::size_t edit_rec(const std::vector<Token>& a, std::size_t i,
                     const std::vector<Token>& b, std::size_t j) {
  if (i == a.size()) return b.size() - j;
  if (j == b.size()) return a.size() - i;
  const std::size_t sub = edit_rec(a, i + 1, b, j + 1) + (a[i] == b[j] ? 0 : 1);
  const std::size_t del = edit_rec(a, i + 1, b, j) + 1;
  const std::size_t ins = edit_rec(a, i, b, j + 1) + 1;
  return std::min({sub, del, ins});
}

}  // namespace

std::size_t edit_distance_by_recursion(const std::vector<Token>& hyp,
                                       const std::vector<Token>& ref) {
  return edit_rec(hyp, 0, ref, 0);
}

Matrix random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols,
                     double sigma) {
  std::normal_distribution<double> dist(0.0, sigma);
  Matrix m(rows, cols);
  for (double& v : m.data()) v = dist(rng);
  return m;
}

Matrix random_log_probs(std::mt19937_64& rng, std::size_t T, std::size_t V) {
  return log_softmax_rows(random_matrix(rng, T, V));
}

LabelSequence random_target(std::mt19937_64& rng, std::size_t L,
                            std::size_t V) {
  std::uniform_int_distribution<Token> tok(1, static_cast<Token>(V - 1));
  LabelSequence y;
  for (std::size_t i = 0; i < L; ++i) y.tokens.push_back(tok(rng));
  return y;
}

}  // namespace kfds::verify
