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

#include "kfds/ctc.hpp"
#include "kfds/loss_result.hpp"
#include "kfds/numerics.hpp"

namespace kfds::loss {

// Floor applied to the summed prediction mass inside the TIL logarithm.
inline constexpr double kTilFloor = 1e-12;

// Time independence loss on probabilities:
//   Y'_c = count of c in target, P'_c = sum_t p_{t,c},
//   value = sum_c Y'_c * ln(Y'_c / max(P'_c, floor)).
// grad is d value / d probs.
LossResult til(const Matrix& probs, const LabelSequence& target);

// Aligned cross-entropy on log-probabilities: the cheapest monotonic
// alignment of every target to some prediction, with each prediction that
// receives no target paying -log p(blank). Exact O(L*T) dynamic program.
// grad is the cross-entropy gradient of the returned optimal path.
LossResult axe(const Matrix& log_probs, const LabelSequence& target);

// Cost of one fixed alignment under the aligned cross-entropy.
// Throws if the path is not monotonic or not within [0, T).
double alignment_cost(const Matrix& log_probs, const LabelSequence& target,
                      const AlignmentPath& path);

// d alignment_cost / d log_probs; independent of log_probs.
Matrix alignment_cost_grad(std::size_t T, std::size_t V,
                           const LabelSequence& target,
                           const AlignmentPath& path);

// Builds the epsilon set for a target_to_pred map over T predictions.
AlignmentPath make_path(std::vector<std::size_t> target_to_pred, std::size_t T);

// -sum_i log P_i(Y_i). Throws "positional CE requires equal lengths".
LossResult positional_ce(const Matrix& log_probs, const LabelSequence& target);

struct JointWeights {
  double alpha0 = 0.2;  // intermediate CTC
  double alpha1 = 0.1;  // length-similar loss (or final CTC)
  double alpha2 = 0.7;  // decoder cross-entropy
};

double joint_objective(double inter_ctc, double lsl, double ce,
                       const JointWeights& w);

}  // namespace kfds::loss
