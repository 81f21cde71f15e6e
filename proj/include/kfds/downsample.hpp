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
#include <span>
#include <string_view>
#include <vector>

#include "kfds/ctc.hpp"
#include "kfds/numerics.hpp"

namespace kfds::downsample {

// One representative frame per non-blank run of the greedy decode.
struct KeyFrameSet {
  std::vector<std::size_t> indices;  // strictly increasing
  std::vector<Token> labels;         // never blank

  std::size_t size() const { return indices.size(); }
  bool empty() const { return indices.empty(); }
};

enum class FusionMode { kNone, kAttention, kConcatenate };

std::string_view fusion_name(FusionMode mode);
// Throws Error for anything but "none", "attention", "concatenate".
FusionMode parse_fusion(std::string_view name);

struct FusionConfig {
  FusionMode mode = FusionMode::kAttention;
  std::size_t left = 1;
  std::size_t right = 1;
};

struct DownsampleResult {
  Matrix frames;                          // K x d
  std::vector<std::size_t> kept_indices;  // source frame of each output row
  double drop_ratio = 0.0;
};

// Groups the greedy decode into runs, drops blank runs and keeps, per run, the
// frame where the run's label has the highest posterior (earliest on ties).
KeyFrameSet select_key_frames(const Matrix& probs);
inline KeyFrameSet select_key_frames(const PosteriorMatrix& posterior) {
  return select_key_frames(posterior.probs());
}

// Sorted union of [k - left, k + right] over all keys, clipped to [0, T).
std::vector<std::size_t> expand_context(const KeyFrameSet& keys,
                                        std::size_t left, std::size_t right,
                                        std::size_t T);

// 1 - K / T. Throws on T == 0 or K > T.
double drop_ratio(std::size_t T, std::size_t K);

// Plain row selection; no fusion.
DownsampleResult keep_frames(const Matrix& frames,
                             std::span<const std::size_t> indices);

// Parameter-free fusion. For each key t the window [t - left, t + right] is
// clipped to the utterance, every channel is softmax-weighted over the
// window's time axis by its own values, and the weighted frames are summed.
DownsampleResult fuse_attention(const Matrix& frames, const KeyFrameSet& keys,
                                std::size_t left = 1, std::size_t right = 1);

// d loss / d frames given d loss / d fused rows.
Matrix fuse_attention_backward(const Matrix& frames, const KeyFrameSet& keys,
                               std::size_t left, std::size_t right,
                               const Matrix& grad_out);

// [h_{t-1}, h_t, h_{t+1}] (edges replicated) times a 3d x d projection.
DownsampleResult fuse_concatenate(const Matrix& frames, const KeyFrameSet& keys,
                                  const Matrix& projection);

struct ConcatenateGrad {
  Matrix frames;
  Matrix projection;
};

ConcatenateGrad fuse_concatenate_backward(const Matrix& frames,
                                          const KeyFrameSet& keys,
                                          const Matrix& projection,
                                          const Matrix& grad_out);

// Projection that reproduces the key frame: [0; I; 0].
Matrix center_projection(std::size_t d);

}  // namespace kfds::downsample
