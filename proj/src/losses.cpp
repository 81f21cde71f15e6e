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

#include "kfds/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace kfds::loss {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_shapes(const Matrix& m, const LabelSequence& target) {
  if (m.rows() == 0) throw Error("loss needs at least one prediction");
  if (target.empty()) throw Error("loss needs a non-empty target");
  validate_target(target, m.cols());
}

// Backpointers of the alignment lattice.
enum class Move : unsigned char { kNone, kAlign, kSkipPrediction, kSkipTarget };

}  // namespace

LossResult til(const Matrix& probs, const LabelSequence& target) {
  check_shapes(probs, target);
  const std::size_t T = probs.rows();
  const std::size_t V = probs.cols();

  std::vector<double> target_mass(V, 0.0);
  for (Token y : target.tokens) target_mass[y] += 1.0;
  // Each column is summed in sorted order so the value is bit-identical
  // under any permutation of the frames.
  std::vector<double> pred_mass(V, 0.0);
  std::vector<double> column(T);
  for (std::size_t c = 0; c < V; ++c) {
    for (std::size_t t = 0; t < T; ++t) column[t] = probs(t, c);
    std::sort(column.begin(), column.end());
    for (double v : column) pred_mass[c] += v;
  }

  LossResult out;
  out.grad = Matrix(T, V, 0.0);
  std::vector<double> dmass(V, 0.0);
  for (std::size_t c = 0; c < V; ++c) {
    if (target_mass[c] == 0.0) continue;
    const double clipped = std::max(pred_mass[c], kTilFloor);
    out.value += target_mass[c] * std::log(target_mass[c] / clipped);
    // Inside the floor the value no longer depends on P'_c.
    dmass[c] = pred_mass[c] > kTilFloor ? -target_mass[c] / clipped : 0.0;
  }
  for (std::size_t t = 0; t < T; ++t) {
    auto g = out.grad.row(t);
    std::copy(dmass.begin(), dmass.end(), g.begin());
  }
  return out;
}

LossResult axe(const Matrix& log_probs, const LabelSequence& target) {
  check_shapes(log_probs, target);
  const std::size_t T = log_probs.rows();
  const std::size_t L = target.size();

  // best(i, j): first i targets placed on predictions [0, j), every one of
  // those predictions either used or paid as blank.
  // used(i, j): same, with target i-1 sitting on prediction j-1.
  Matrix best(L + 1, T + 1, kInf);
  Matrix used(L + 1, T + 1, kInf);
  std::vector<Move> best_move((L + 1) * (T + 1), Move::kNone);
  std::vector<Move> used_move((L + 1) * (T + 1), Move::kNone);
  auto at = [T](std::size_t i, std::size_t j) { return i * (T + 1) + j; };

  best(0, 0) = 0.0;
  for (std::size_t j = 1; j <= T; ++j) {
    const double eps = -log_probs(j - 1, kBlank);
    for (std::size_t i = 0; i <= L; ++i) {
      if (i >= 1) {
        const double emit = -log_probs(j - 1, target.tokens[i - 1]);
        const double align = best(i - 1, j - 1) + emit;
        const double stack = used(i - 1, j) + emit;
        if (align <= stack) {
          used(i, j) = align;
          used_move[at(i, j)] = Move::kAlign;
        } else {
          used(i, j) = stack;
          used_move[at(i, j)] = Move::kSkipTarget;
        }
      }
#ifdef KFDS_FAULT_AXE_FREE_SKIP
      // Deliberately broken lattice for the verify negative control: skipped
      // predictions stop paying for blank.
      const double skip = best(i, j - 1) + 0.0 * eps;
#else
      const double skip = best(i, j - 1) + eps;
#endif
      const double via_used = used(i, j);
      // Ties: align > skip-prediction > skip-target.
      const bool used_is_align = used_move[at(i, j)] == Move::kAlign;
      const bool take_used =
          via_used < skip || (via_used == skip && used_is_align);
      if (take_used && via_used < kInf) {
        best(i, j) = via_used;
        best_move[at(i, j)] = used_move[at(i, j)];
      } else if (skip < kInf) {
        best(i, j) = skip;
        best_move[at(i, j)] = Move::kSkipPrediction;
      }
    }
  }

  LossResult out;
  out.value = best(L, T);

  std::vector<std::size_t> target_to_pred(L, 0);
  std::size_t i = L;
  std::size_t j = T;
  bool in_used = false;
  while (i > 0 || j > 0) {
    const Move m = in_used ? used_move[at(i, j)] : best_move[at(i, j)];
    switch (m) {
      case Move::kAlign:
        target_to_pred[i - 1] = j - 1;
        --i;
        --j;
        in_used = false;
        break;
      case Move::kSkipTarget:
        target_to_pred[i - 1] = j - 1;
        --i;
        in_used = true;
        break;
      case Move::kSkipPrediction:
        --j;
        in_used = false;
        break;
      case Move::kNone:
        throw Error("alignment lattice backtrace failed");
    }
  }
  AlignmentPath path = make_path(std::move(target_to_pred), T);
  out.grad = alignment_cost_grad(T, log_probs.cols(), target, path);
  out.alignment = std::move(path);
  return out;
}

AlignmentPath make_path(std::vector<std::size_t> target_to_pred,
                        std::size_t T) {
  AlignmentPath path;
  std::vector<bool> hit(T, false);
  for (std::size_t p : target_to_pred) {
    if (p >= T) throw Error("alignment position beyond the predictions");
    hit[p] = true;
  }
  for (std::size_t k = 0; k < T; ++k) {
    if (!hit[k]) path.epsilon_positions.push_back(k);
  }
  path.target_to_pred = std::move(target_to_pred);
  return path;
}

double alignment_cost(const Matrix& log_probs, const LabelSequence& target,
                      const AlignmentPath& path) {
  check_shapes(log_probs, target);
  if (path.target_to_pred.size() != target.size()) {
    throw Error("alignment length does not match the target");
  }
  const std::size_t T = log_probs.rows();
  std::vector<bool> hit(T, false);
  double cost = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    const std::size_t p = path.target_to_pred[i];
    if (p >= T) throw Error("alignment position beyond the predictions");
    if (i > 0 && p < path.target_to_pred[i - 1]) {
      throw Error("alignment is not monotonic");
    }
    hit[p] = true;
    cost -= log_probs(p, target.tokens[i]);
  }
  for (std::size_t k = 0; k < T; ++k) {
    if (!hit[k]) cost -= log_probs(k, kBlank);
  }
  return cost;
}

Matrix alignment_cost_grad(std::size_t T, std::size_t V,
                           const LabelSequence& target,
                           const AlignmentPath& path) {
  Matrix g(T, V, 0.0);
  for (std::size_t i = 0; i < target.size(); ++i) {
    g(path.target_to_pred[i], target.tokens[i]) -= 1.0;
  }
  for (std::size_t k : path.epsilon_positions) g(k, kBlank) -= 1.0;
  return g;
}

LossResult positional_ce(const Matrix& log_probs, const LabelSequence& target) {
  check_shapes(log_probs, target);
  if (log_probs.rows() != target.size()) {
    throw Error("positional CE requires equal lengths");
  }
  LossResult out;
  out.grad = Matrix(log_probs.rows(), log_probs.cols(), 0.0);
  for (std::size_t i = 0; i < target.size(); ++i) {
    out.value -= log_probs(i, target.tokens[i]);
    out.grad(i, target.tokens[i]) = -1.0;
  }
  return out;
}

double joint_objective(double inter_ctc, double lsl, double ce,
                       const JointWeights& w) {
  return w.alpha0 * inter_ctc + w.alpha1 * lsl + w.alpha2 * ce;
}

}  // namespace kfds::loss
