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
#include <cstdint>
#include <span>
#include <vector>

#include "kfds/loss_result.hpp"
#include "kfds/numerics.hpp"

namespace kfds {

using Token = std::int32_t;

// The blank symbol doubles as the epsilon of the aligned cross-entropy loss.
inline constexpr Token kBlank = 0;

struct Vocabulary {
  std::size_t size = 2;
  Token blank = kBlank;

  // Throws unless size >= 2 and blank < size.
  void validate() const;
};

// Target token sequence. Never contains the blank.
struct LabelSequence {
  std::vector<Token> tokens;

  std::size_t size() const { return tokens.size(); }
  bool empty() const { return tokens.empty(); }
  bool operator==(const LabelSequence&) const = default;
};

// Throws Error if any token is blank or outside [1, vocab).
void validate_target(const LabelSequence& target, std::size_t vocab);

// Number of adjacent equal pairs; each one forces an extra blank frame.
std::size_t repeat_count(std::span<const Token> tokens);

// T x V row-stochastic matrix of per-frame probabilities.
class PosteriorMatrix {
 public:
  // Throws if any row is not a distribution (within 1e-9) or has a
  // non-positive entry.
  explicit PosteriorMatrix(Matrix probs);

  // Wraps softmax_rows(logits); always valid.
  static PosteriorMatrix from_logits(const Matrix& logits);

  const Matrix& probs() const { return probs_; }
  std::size_t frames() const { return probs_.rows(); }
  std::size_t vocab() const { return probs_.cols(); }

 private:
  struct Trusted {};
  PosteriorMatrix(Matrix probs, Trusted) : probs_(std::move(probs)) {}
  Matrix probs_;
};

namespace ctc {

// -log p(target | log_probs) over every blank-augmented alignment.
// `grad` is d loss / d log_probs, i.e. minus the state occupancy per (t, v).
LossResult loss(const Matrix& log_probs, const LabelSequence& target);

// Per-frame argmax; ties go to the smaller token index.
std::vector<Token> greedy_decode(const Matrix& probs);
inline std::vector<Token> greedy_decode(const PosteriorMatrix& posterior) {
  return greedy_decode(posterior.probs());
}

// Merge runs of equal labels, then drop blanks.
LabelSequence collapse(std::span<const Token> frame_labels);

// Drop blanks only. Used where every frame already stands for one token.
LabelSequence strip_blanks(std::span<const Token> frame_labels);

}  // namespace ctc
}  // namespace kfds
