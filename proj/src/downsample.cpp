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

#include "kfds/downsample.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "kfds/simd.hpp"

namespace kfds::downsample {
namespace {

struct Window {
  std::size_t begin;
  std::size_t end;  // exclusive
};

Window clipped_window(std::size_t t, std::size_t left, std::size_t right,
                      std::size_t T) {
  return {t >= left ? t - left : 0, std::min(T, t + right + 1)};
}

void check_keys(const KeyFrameSet& keys, std::size_t T) {
  for (std::size_t k : keys.indices) {
    if (k >= T) throw Error("key frame index beyond the utterance");
  }
}

std::size_t concat_source(std::size_t t, int offset, std::size_t T) {
  if (offset < 0) return t == 0 ? 0 : t - 1;
  if (offset > 0) return t + 1 < T ? t + 1 : T - 1;
  return t;
}

void check_projection(const Matrix& frames, const Matrix& projection) {
  const std::size_t d = frames.cols();
  if (projection.rows() != 3 * d || projection.cols() != d) {
    throw Error("projection must be " + std::to_string(3 * d) + "x" +
                std::to_string(d) + ", got " +
                std::to_string(projection.rows()) + "x" +
                std::to_string(projection.cols()));
  }
}

}  // namespace

std::string_view fusion_name(FusionMode mode) {
  switch (mode) {
    case FusionMode::kNone: return "none";
    case FusionMode::kAttention: return "attention";
    case FusionMode::kConcatenate: return "concatenate";
  }
  return "none";
}

FusionMode parse_fusion(std::string_view name) {
  if (name == "none") return FusionMode::kNone;
  if (name == "attention") return FusionMode::kAttention;
  if (name == "concatenate") return FusionMode::kConcatenate;
  throw Error("unknown fusion mode '" + std::string(name) + "'");
}

KeyFrameSet select_key_frames(const Matrix& probs) {
  const std::vector<Token> decode = ctc::greedy_decode(probs);
  KeyFrameSet keys;
  std::size_t t = 0;
  while (t < decode.size()) {
    const Token label = decode[t];
    std::size_t end = t;
    std::size_t best = t;
    while (end < decode.size() && decode[end] == label) {
      if (probs(end, label) > probs(best, label)) best = end;
      ++end;
    }
    if (label != kBlank) {
      keys.indices.push_back(best);
      keys.labels.push_back(label);
    }
    t = end;
  }
  return keys;
}

std::vector<std::size_t> expand_context(const KeyFrameSet& keys,
                                        std::size_t left, std::size_t right,
                                        std::size_t T) {
  check_keys(keys, T);
  std::vector<std::size_t> out;
  for (std::size_t k : keys.indices) {
    const Window w = clipped_window(k, left, right, T);
    // Keys are increasing, so only the tail of `out` can overlap.
    std::size_t from = w.begin;
    if (!out.empty()) from = std::max(from, out.back() + 1);
    for (std::size_t i = from; i < w.end; ++i) out.push_back(i);
  }
  return out;
}

double drop_ratio(std::size_t T, std::size_t K) {
  if (T == 0) throw Error("drop ratio of an empty utterance");
  if (K > T) throw Error("kept more frames than the utterance has");
  return 1.0 - static_cast<double>(K) / static_cast<double>(T);
}

DownsampleResult keep_frames(const Matrix& frames,
                             std::span<const std::size_t> indices) {
  DownsampleResult out;
  out.frames = frames.gather_rows(indices);
  out.kept_indices.assign(indices.begin(), indices.end());
  out.drop_ratio = drop_ratio(frames.rows(), indices.size());
  return out;
}

DownsampleResult fuse_attention(const Matrix& frames, const KeyFrameSet& keys,
                                std::size_t left, std::size_t right) {
  const std::size_t T = frames.rows();
  const std::size_t d = frames.cols();
  check_keys(keys, T);
  DownsampleResult out;
  out.frames = Matrix(keys.size(), d);
  out.kept_indices = keys.indices;
  out.drop_ratio = drop_ratio(T, keys.size());

  std::vector<double> weights;
  for (std::size_t k = 0; k < keys.size(); ++k) {
    const Window w = clipped_window(keys.indices[k], left, right, T);
    weights.resize(w.end - w.begin);
    auto dst = out.frames.row(k);
    for (std::size_t c = 0; c < d; ++c) {
      double m = frames(w.begin, c);
      for (std::size_t i = w.begin + 1; i < w.end; ++i) {
        m = std::max(m, frames(i, c));
      }
      double z = 0.0;
      for (std::size_t i = w.begin; i < w.end; ++i) {
        weights[i - w.begin] = std::exp(frames(i, c) - m);
        z += weights[i - w.begin];
      }
      double acc = 0.0;
      for (std::size_t i = w.begin; i < w.end; ++i) {
        acc += weights[i - w.begin] / z * frames(i, c);
      }
      dst[c] = acc;
    }
  }
  return out;
}

Matrix fuse_attention_backward(const Matrix& frames, const KeyFrameSet& keys,
                               std::size_t left, std::size_t right,
                               const Matrix& grad_out) {
  const std::size_t T = frames.rows();
  const std::size_t d = frames.cols();
  check_keys(keys, T);
  if (grad_out.rows() != keys.size() || grad_out.cols() != d) {
    throw Error("fused-frame gradient shape mismatch");
  }
  Matrix grad(T, d, 0.0);
  std::vector<double> weights;
  for (std::size_t k = 0; k < keys.size(); ++k) {
    const Window w = clipped_window(keys.indices[k], left, right, T);
    weights.resize(w.end - w.begin);
    for (std::size_t c = 0; c < d; ++c) {
      double m = frames(w.begin, c);
      for (std::size_t i = w.begin + 1; i < w.end; ++i) {
        m = std::max(m, frames(i, c));
      }
      double z = 0.0;
      for (std::size_t i = w.begin; i < w.end; ++i) {
        weights[i - w.begin] = std::exp(frames(i, c) - m);
        z += weights[i - w.begin];
      }
      double fused = 0.0;
      for (std::size_t i = w.begin; i < w.end; ++i) {
        weights[i - w.begin] /= z;
        fused += weights[i - w.begin] * frames(i, c);
      }
      // d fused / d h_i = s_i * (1 + h_i - fused)
      const double g = grad_out(k, c);
      for (std::size_t i = w.begin; i < w.end; ++i) {
        grad(i, c) += g * weights[i - w.begin] * (1.0 + frames(i, c) - fused);
      }
    }
  }
  return grad;
}

DownsampleResult fuse_concatenate(const Matrix& frames, const KeyFrameSet& keys,
                                  const Matrix& projection) {
  check_projection(frames, projection);
  const std::size_t T = frames.rows();
  const std::size_t d = frames.cols();
  check_keys(keys, T);
  const auto& kern = simd::active();
  DownsampleResult out;
  out.frames = Matrix(keys.size(), d);
  out.kept_indices = keys.indices;
  out.drop_ratio = drop_ratio(T, keys.size());
  for (std::size_t k = 0; k < keys.size(); ++k) {
    double* dst = out.frames.row(k).data();
    for (int block = 0; block < 3; ++block) {
      const auto src = frames.row(concat_source(keys.indices[k], block - 1, T));
      for (std::size_t c = 0; c < d; ++c) {
        kern.axpy(src[c], projection.row(block * d + c).data(), dst, d);
      }
    }
  }
  return out;
}

ConcatenateGrad fuse_concatenate_backward(const Matrix& frames,
                                          const KeyFrameSet& keys,
                                          const Matrix& projection,
                                          const Matrix& grad_out) {
  check_projection(frames, projection);
  const std::size_t T = frames.rows();
  const std::size_t d = frames.cols();
  check_keys(keys, T);
  if (grad_out.rows() != keys.size() || grad_out.cols() != d) {
    throw Error("fused-frame gradient shape mismatch");
  }
  const auto& kern = simd::active();
  ConcatenateGrad grad{Matrix(T, d, 0.0), Matrix(3 * d, d, 0.0)};
  for (std::size_t k = 0; k < keys.size(); ++k) {
    const double* g = grad_out.row(k).data();
    for (int block = 0; block < 3; ++block) {
      const std::size_t src_row = concat_source(keys.indices[k], block - 1, T);
      const auto src = frames.row(src_row);
      auto dst = grad.frames.row(src_row);
      for (std::size_t c = 0; c < d; ++c) {
        const double* p = projection.row(block * d + c).data();
        kern.axpy(src[c], g, grad.projection.row(block * d + c).data(), d);
        dst[c] += kern.dot(p, g, d);
      }
    }
  }
  return grad;
}

Matrix center_projection(std::size_t d) {
  Matrix p(3 * d, d, 0.0);
  for (std::size_t c = 0; c < d; ++c) p(d + c, c) = 1.0;
  return p;
}

}  // namespace kfds::downsample
