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

// Brute-force reference computations and the seeded property suites built on
// them. Nothing here calls the dynamic programs it checks.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "kfds/ctc.hpp"
#include "kfds/numerics.hpp"

namespace kfds::verify {

// -log of the total probability of every length-T frame string (V^T of them)
// whose CTC collapse equals the target. -inf log-probs are allowed.
double ctc_by_enumeration(const Matrix& log_probs, const LabelSequence& target);

struct AlignmentOracle {
  double best = 0.0;
  double second_best = 0.0;  // +inf when only one alignment exists
  std::size_t alignments = 0;
};

// Minimum aligned cross-entropy over every non-decreasing map
// {0..L-1} -> {0..T-1}, with unused predictions paying -log p(blank).
AlignmentOracle axe_by_enumeration(const Matrix& log_probs,
                                   const LabelSequence& target);

// Plain recursion over the three edit operations. Exponential; L <= ~8.
std::size_t edit_distance_by_recursion(const std::vector<Token>& hyp,
                                       const std::vector<Token>& ref);

struct SuiteResult {
  std::string name;
  std::size_t cases = 0;
  std::size_t passed = 0;
  double max_error = 0.0;
  std::vector<std::string> failures;

  bool ok() const { return cases > 0 && passed == cases; }
};

// Fixed-seed suites. Each result lists any failing instance with its seed.
SuiteResult axe_oracle_suite(std::uint64_t seed = 20240101, std::size_t n = 200);
SuiteResult axe_vs_ce_suite(std::uint64_t seed = 20240202, std::size_t n = 200);
SuiteResult ctc_oracle_suite(std::uint64_t seed = 20240303, std::size_t n = 200);
SuiteResult til_properties_suite(std::uint64_t seed = 20240404,
                                 std::size_t n = 200);

// One result per differentiated operation, each over `n` instances.
std::vector<SuiteResult> gradient_suites(std::uint64_t seed = 20240505,
                                         std::size_t n = 50);

// Random helpers shared with the tests.
Matrix random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols,
                     double sigma = 1.0);
Matrix random_log_probs(std::mt19937_64& rng, std::size_t T, std::size_t V);
LabelSequence random_target(std::mt19937_64& rng, std::size_t L,
                            std::size_t V);

}  // namespace kfds::verify
