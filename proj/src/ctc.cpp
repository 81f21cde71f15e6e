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

#include "kfds/ctc.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace kfds {

void Vocabulary::validate() const {
  if (size < 2) throw Error("vocabulary needs at least two symbols");
  if (blank < 0 || static_cast<std::size_t>(blank) >= size) {
    throw Error("blank index outside the vocabulary");
  }
}

void validate_target(const LabelSequence& target, std::size_t vocab) {
  for (Token t : target.tokens) {
    if (t == kBlank) throw Error("target contains the blank symbol");
    if (t < 0 || static_cast<std::size_t>(t) >= vocab) {
      throw Error("target token " + std::to_string(t) +
                  " outside vocabulary of size " + std::to_string(vocab));
    }
  }
}

std::size_t repeat_count(std::span<const Token> tokens) {
  std::size_t n = 0;
  for (std::size_t i = 1; i < tokens.size(); ++i) {
    if (tokens[i] == tokens[i - 1]) ++n;
  }
  return n;
}

PosteriorMatrix::PosteriorMatrix(Matrix probs) : probs_(std::move(probs)) {
  for (std::size_t t = 0; t < probs_.rows(); ++t) {
    double s = 0.0;
    for (double p : probs_.row(t)) {
      if (!(p > 0.0) || !std::isfinite(p)) {
        throw Error("posterior row " + std::to_string(t) +
                    " has a non-positive entry");
      }
      s += p;
    }
    if (std::abs(s - 1.0) > 1e-9) {
      throw Error("posterior row " + std::to_string(t) + " sums to " +
                  std::to_string(s));
    }
  }
}

PosteriorMatrix PosteriorMatrix::from_logits(const Matrix& logits) {
  return PosteriorMatrix(softmax_rows(logits), Trusted{});
}

namespace ctc {

LossResult loss(const Matrix& log_probs, const LabelSequence& target) {
  const std::size_t T = log_probs.rows();
  const std::size_t V = log_probs.cols();
  const std::size_t L = target.size();
  if (L == 0) throw Error("ctc loss requires a non-empty target");
  validate_target(target, V);
  if (T < L + repeat_count(target.tokens)) {
    throw Error("target longer than input permits");
  }

  // Extended label sequence: blank, y1, blank, y2, ..., yL, blank.
  const std::size_t S = 2 * L + 1;
  std::vector<Token> ext(S, kBlank);
  for (std::size_t i = 0; i < L; ++i) ext[2 * i + 1] = target.tokens[i];

  auto can_skip = [&](std::size_t s) {
    return s >= 2 && ext[s] != kBlank && ext[s] != ext[s - 2];
  };

  Matrix alpha(T, S, kNegInf);
  alpha(0, 0) = log_probs(0, ext[0]);
  alpha(0, 1) = log_probs(0, ext[1]);
  for (std::size_t t = 1; t < T; ++t) {
    for (std::size_t s = 0; s < S; ++s) {
      double a = alpha(t - 1, s);
      if (s >= 1) a = log_add(a, alpha(t - 1, s - 1));
      if (can_skip(s)) a = log_add(a, alpha(t - 1, s - 2));
      if (a != kNegInf) alpha(t, s) = a + log_probs(t, ext[s]);
    }
  }

  Matrix beta(T, S, kNegInf);
  beta(T - 1, S - 1) = log_probs(T - 1, ext[S - 1]);
  beta(T - 1, S - 2) = log_probs(T - 1, ext[S - 2]);
  for (std::size_t t = T - 1; t-- > 0;) {
    for (std::size_t s = 0; s < S; ++s) {
      double b = beta(t + 1, s);
      if (s + 1 < S) b = log_add(b, beta(t + 1, s + 1));
      if (s + 2 < S && can_skip(s + 2)) b = log_add(b, beta(t + 1, s + 2));
      if (b != kNegInf) beta(t, s) = b + log_probs(t, ext[s]);
    }
  }

  const double log_likelihood =
      log_add(alpha(T - 1, S - 1), alpha(T - 1, S - 2));
  if (!std::isfinite(log_likelihood)) {
    throw Error("target longer than input permits");
  }

  LossResult out;
  out.value = -log_likelihood;
  out.grad = Matrix(T, V, 0.0);
  // alpha and beta both include the emission at t, so occupancy subtracts it
  // once: gamma_t(s) = alpha_t(s) + beta_t(s) - lp_t(s) - log p.
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t s = 0; s < S; ++s) {
      const double ab = alpha(t, s) + beta(t, s);
      if (ab == kNegInf || std::isnan(ab)) continue;
      const double occ =
          std::exp(ab - log_probs(t, ext[s]) - log_likelihood);
      out.grad(t, ext[s]) -= occ;
    }
  }
  return out;
}

std::vector<Token> greedy_decode(const Matrix& probs) {
  std::vector<Token> out(probs.rows(), kBlank);
  for (std::size_t t = 0; t < probs.rows(); ++t) {
    const auto row = probs.row(t);
    // max_element returns the first maximum, i.e. the smaller index on ties.
    out[t] = static_cast<Token>(
        std::distance(row.begin(), std::max_element(row.begin(), row.end())));
  }
  return out;
}

LabelSequence collapse(std::span<const Token> frame_labels) {
  LabelSequence out;
  for (std::size_t t = 0; t < frame_labels.size(); ++t) {
    if (t > 0 && frame_labels[t] == frame_labels[t - 1]) continue;
    if (frame_labels[t] != kBlank) out.tokens.push_back(frame_labels[t]);
  }
  return out;
}

LabelSequence strip_blanks(std::span<const Token> frame_labels) {
  LabelSequence out;
  for (Token t : frame_labels) {
    if (t != kBlank) out.tokens.push_back(t);
  }
  return out;
}

}  // namespace ctc
}  // namespace kfds
