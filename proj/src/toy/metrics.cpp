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
#include <vector>

#include "kfds/pipeline.hpp"

namespace kfds::toy {

std::size_t edit_distance(std::span<const Token> hyp,
                          std::span<const Token> ref) {
  std::vector<std::size_t> prev(ref.size() + 1);
  std::vector<std::size_t> cur(ref.size() + 1);
  for (std::size_t j = 0; j <= ref.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= hyp.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= ref.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (hyp[i - 1] == ref[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[ref.size()];
}

EvalReport score_hypotheses(const std::vector<LabelSequence>& hyps,
                            const std::vector<LabelSequence>& refs) {
  if (hyps.size() != refs.size()) {
    throw Error("hypothesis and reference counts differ");
  }
  EvalReport report;
  report.utterances = refs.size();
  for (std::size_t i = 0; i < refs.size(); ++i) {
    report.errors += edit_distance(hyps[i].tokens, refs[i].tokens);
    report.reference_tokens += refs[i].size();
  }
  if (report.reference_tokens > 0) {
    report.token_error_rate = static_cast<double>(report.errors) /
                              static_cast<double>(report.reference_tokens);
  }
  return report;
}

}  // namespace kfds::toy
