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
#include <optional>
#include <vector>

#include "kfds/numerics.hpp"

namespace kfds {

// Monotonic target-to-prediction alignment. Positions are 0-based here;
// target_to_pred is non-decreasing and epsilon_positions holds every
// prediction index not in its range, ascending.
struct AlignmentPath {
  std::vector<std::size_t> target_to_pred;
  std::vector<std::size_t> epsilon_positions;

  bool operator==(const AlignmentPath&) const = default;
};

struct LossResult {
  double value = 0.0;
  // Same shape as the differentiated input.
  Matrix grad;
  std::optional<AlignmentPath> alignment;
};

}  // namespace kfds
